//! Debug-frame overlay: the steering command drawn as an arrow from the
//! image center, the way the flight indicator figures show it.

use stereo_avoid_core::image::RgbImage;

const ARROW_COLOR: [u8; 3] = [230, 40, 40];

/// Draws the command as an arrow from the image center; positive yaw points
/// right, positive pitch points up. Zero commands draw a small center dot.
pub fn command_arrow(img: &mut RgbImage, pitch: f64, yaw: f64) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let (cx, cy) = (w / 2, h / 2);
    let len = 0.4 * w.min(h) as f64;
    let tip_x = cx + (yaw * len).round() as i64;
    let tip_y = cy - (pitch * len).round() as i64;
    line(img, cx, cy, tip_x, tip_y);
    blob(img, tip_x, tip_y, 3);
    blob(img, cx, cy, 1);
}

fn line(img: &mut RgbImage, x0: i64, y0: i64, x1: i64, y1: i64) {
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
    for i in 0..=steps {
        let x = x0 + (x1 - x0) * i / steps;
        let y = y0 + (y1 - y0) * i / steps;
        blob(img, x, y, 1);
    }
}

fn blob(img: &mut RgbImage, x: i64, y: i64, radius: i64) {
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let (px, py) = (x + dx, y + dy);
            if px >= 0 && py >= 0 && px < img.width() as i64 && py < img.height() as i64 {
                img.set(px as u32, py as u32, ARROW_COLOR);
            }
        }
    }
}
