use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde_json::json;

use stereo_avoid_core::camera::CameraRig;
use stereo_avoid_core::controller::{Controller, ControllerConfig, RulePreset};
use stereo_avoid_core::disparity::{
    block_match, disparity_to_depth, fused_pipeline, DepthMap, DisparityMap, MatchParams,
};
use stereo_avoid_core::fuzzy::{defuzz_centroid, defuzz_mean_of_max, infer, Defuzz, RuleBase};
use stereo_avoid_core::image::{GrayImage, RgbImage, StereoPair};
use stereo_avoid_core::lut::DepthLut;
use stereo_avoid_core::regions::{
    center_region_px, make_grid, region_min_depths, Region, RegionDepths, RegionGrid,
};
use stereo_avoid_core::sim::{
    render_stereo, run_episode, scenario_by_name, Scene, VehicleState, SCENARIO_NAMES,
};

use crate::draw;
use crate::errors::{at_path, compute_msg, usage, usage_msg, Result};

/// Stereo pair input, matching configuration, and refinement table shared by
/// the image-driven subcommands.
#[derive(Args)]
pub struct PairArgs {
    /// Left image (binary PGM)
    #[arg(long, requires = "right", conflicts_with = "sbs")]
    left: Option<PathBuf>,
    /// Right image (binary PGM)
    #[arg(long, requires = "left", conflicts_with = "sbs")]
    right: Option<PathBuf>,
    /// Side-by-side frame (left half | right half), instead of --left/--right
    #[arg(long)]
    sbs: Option<PathBuf>,
    /// Camera rig JSON (baseline_m, focal_px, principal point, dimensions)
    #[arg(long)]
    rig: PathBuf,
    /// Match parameters JSON; individual flags below override its fields
    #[arg(long)]
    params: Option<PathBuf>,
    /// SAD window radius in px
    #[arg(long)]
    window: Option<u32>,
    /// Inclusive disparity search bound in px
    #[arg(long)]
    max_disp: Option<u32>,
    /// Uniqueness ratio in [0, 1)
    #[arg(long)]
    uniqueness: Option<f64>,
    /// Enable the left-right check with this max disagreement in px
    #[arg(long)]
    lr_check: Option<f64>,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Depth-refinement LUT CSV (identity when omitted)
    #[arg(long)]
    lut: Option<PathBuf>,
    /// Center region side in px (default: projection of a 0.5 m window at 1.5 m)
    #[arg(long)]
    center_side: Option<u32>,
}

impl PairArgs {
    fn load_pair(&self) -> Result<StereoPair> {
        let rig_text = at_path(&self.rig, fs::read_to_string(&self.rig))?;
        let rig = at_path(&self.rig, CameraRig::from_json_str(&rig_text))?;
        let (left, right) = match (&self.sbs, &self.left, &self.right) {
            (Some(sbs), _, _) => {
                let frame = at_path(sbs, GrayImage::load_pgm(sbs))?;
                at_path(sbs, frame.split_side_by_side())?
            }
            (None, Some(left), Some(right)) => (
                at_path(left, GrayImage::load_pgm(left))?,
                at_path(right, GrayImage::load_pgm(right))?,
            ),
            _ => return Err(usage_msg("need either --sbs or both --left and --right")),
        };
        StereoPair::new(left, right, rig).map_err(usage)
    }

    fn load_params(&self) -> Result<MatchParams> {
        let mut params = match &self.params {
            Some(path) => {
                let text = at_path(path, fs::read_to_string(path))?;
                at_path(path, serde_json::from_str(&text))?
            }
            None => MatchParams::default(),
        };
        if let Some(w) = self.window {
            params.window_radius_px = w;
        }
        if let Some(d) = self.max_disp {
            params.max_disparity_px = d;
        }
        if let Some(u) = self.uniqueness {
            params.uniqueness_ratio = u;
        }
        if let Some(px) = self.lr_check {
            params.lr_consistency_px = Some(px);
        }
        params.validate().map_err(usage_msg)?;
        Ok(params)
    }

    fn load_lut(&self) -> Result<DepthLut> {
        match &self.lut {
            Some(path) => at_path(path, DepthLut::load_csv(path)),
            None => Ok(DepthLut::identity()),
        }
    }

    fn grid(&self, rig: &CameraRig) -> Result<RegionGrid> {
        let side = match self.center_side {
            Some(side) => side,
            None => center_region_px(rig.focal_px, 0.5, 1.5).map_err(usage)?,
        };
        make_grid(rig.width_px, rig.height_px, side).map_err(usage)
    }

    fn check(&self, pair: &StereoPair, params: &MatchParams) -> Result<()> {
        let win = 2 * params.window_radius_px + 1;
        if pair.left.width() < win || pair.left.height() < win {
            return Err(usage_msg(format!(
                "images {}x{} are smaller than the {win}x{win} SAD window",
                pair.left.width(),
                pair.left.height()
            )));
        }
        if params.max_disparity_px >= pair.left.width() {
            return Err(usage_msg(format!(
                "--max-disp {} must be below the image width {}",
                params.max_disparity_px,
                pair.left.width()
            )));
        }
        Ok(())
    }
}

fn load_controller(rules: &str, mut cfg: ControllerConfig) -> Result<Controller> {
    if let Ok(preset) = rules.parse::<RulePreset>() {
        cfg.preset = preset;
        return Ok(Controller::new(cfg));
    }
    let path = Path::new(rules);
    let rb = at_path(path, RuleBase::load_json(path))?;
    Ok(Controller::with_custom_rulebase(rb, cfg))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    at_path(path, fs::write(path, format!("{value:#}\n")))
}

#[derive(Args)]
pub struct DepthArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Intensity per disparity px in the output PGM
    #[arg(long, default_value_t = 4.0)]
    scale: f64,
    /// Rule preset (paper-literal | paper-corrected) or a rule-base JSON path
    #[arg(long, default_value = "paper-corrected")]
    rules: String,
    /// Depth normalization span in meters
    #[arg(long, default_value_t = 3.0)]
    span: f64,
    /// Output directory for disparity.pgm, depth.csv, command.json
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

/// Full pipeline: match, convert, refine, distill, steer.
pub fn depth(args: DepthArgs) -> Result<()> {
    let pair = args.pair.load_pair()?;
    let params = args.pair.load_params()?;
    args.pair.check(&pair, &params)?;
    let lut = args.pair.load_lut()?;
    let grid = args.pair.grid(&pair.rig)?;
    let controller = load_controller(
        &args.rules,
        ControllerConfig { normalization_span_m: args.span, ..ControllerConfig::default() },
    )?;

    let disparity = block_match(&pair, &params, args.pair.workers);
    let (depth, depths) = fused_pipeline(&pair, &params, &grid, &lut, args.pair.workers);
    let outcome = controller.steer(&depths);

    at_path(&args.out_dir, fs::create_dir_all(&args.out_dir))?;
    let disparity_path = args.out_dir.join("disparity.pgm");
    at_path(&disparity_path, disparity_to_pgm(&disparity, args.scale).save_pgm(&disparity_path))?;
    let depth_path = args.out_dir.join("depth.csv");
    at_path(&depth_path, depth.save_csv(&depth_path))?;

    let command = json!({
        "pitch": outcome.command.pitch,
        "yaw": outcome.command.yaw,
        "active_controller": outcome.active,
        "rule_strengths": outcome.rule_strengths,
    });
    write_json(&args.out_dir.join("command.json"), &command)?;

    println!(
        "{:#}",
        json!({ "region_depths": depths, "command": command })
    );
    Ok(())
}

fn disparity_to_pgm(map: &DisparityMap, scale: f64) -> GrayImage {
    GrayImage::from_fn(map.width(), map.height(), |x, y| {
        let v = map.get(x, y);
        if v.is_finite() {
            (v as f64 * scale).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    })
}

#[derive(Args)]
pub struct RegionsArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Also dump the nine rectangle bounds as [x0, y0, x1, y1]
    #[arg(long)]
    grid: bool,
}

pub fn regions(args: RegionsArgs) -> Result<()> {
    let pair = args.pair.load_pair()?;
    let params = args.pair.load_params()?;
    args.pair.check(&pair, &params)?;
    let lut = args.pair.load_lut()?;
    let grid = args.pair.grid(&pair.rig)?;
    let (_, depths) = fused_pipeline(&pair, &params, &grid, &lut, args.pair.workers);

    let mut output = json!({ "region_depths": depths });
    if args.grid {
        let mut rects = serde_json::Map::new();
        for region in Region::ALL {
            let (x0, y0, x1, y1) = grid.rect(region);
            rects.insert(region.name().to_string(), json!([x0, y0, x1, y1]));
        }
        output["grid"] = rects.into();
    }
    println!("{output:#}");
    Ok(())
}

#[derive(Args)]
pub struct SteerArgs {
    /// Region depths JSON file with the nine named fields
    #[arg(long, conflicts_with_all = ["center", "up", "down", "left", "right",
        "up_left", "up_right", "down_left", "down_right"])]
    depths: Option<PathBuf>,
    #[arg(long)]
    center: Option<f32>,
    #[arg(long)]
    up: Option<f32>,
    #[arg(long)]
    down: Option<f32>,
    #[arg(long)]
    left: Option<f32>,
    #[arg(long)]
    right: Option<f32>,
    #[arg(long)]
    up_left: Option<f32>,
    #[arg(long)]
    up_right: Option<f32>,
    #[arg(long)]
    down_left: Option<f32>,
    #[arg(long)]
    down_right: Option<f32>,
    /// Rule preset (paper-literal | paper-corrected) or a rule-base JSON path
    #[arg(long, default_value = "paper-corrected")]
    rules: String,
    /// Depth normalization span in meters
    #[arg(long, default_value_t = 3.0)]
    span: f64,
}

pub fn steer(args: SteerArgs) -> Result<()> {
    let depths = match &args.depths {
        Some(path) => {
            let text = at_path(path, fs::read_to_string(path))?;
            at_path(path, serde_json::from_str::<RegionDepths>(&text))?
        }
        None => {
            let field = |v: Option<f32>, name: &str| {
                v.ok_or_else(|| usage_msg(format!("missing --{name} (or use --depths)")))
            };
            RegionDepths {
                center: field(args.center, "center")?,
                up: field(args.up, "up")?,
                down: field(args.down, "down")?,
                left: field(args.left, "left")?,
                right: field(args.right, "right")?,
                up_left: field(args.up_left, "up-left")?,
                up_right: field(args.up_right, "up-right")?,
                down_left: field(args.down_left, "down-left")?,
                down_right: field(args.down_right, "down-right")?,
            }
        }
    };
    for region in Region::ALL {
        if !(depths.get(region) > 0.0) {
            return Err(usage_msg(format!(
                "depth for {} must be positive, got {}",
                region.name(),
                depths.get(region)
            )));
        }
    }
    let controller = load_controller(
        &args.rules,
        ControllerConfig { normalization_span_m: args.span, ..ControllerConfig::default() },
    )?;
    let outcome = controller.steer(&depths);
    println!(
        "{:#}",
        json!({
            "pitch": outcome.command.pitch,
            "yaw": outcome.command.yaw,
            "active_controller": outcome.active,
            "rule_strengths": outcome.rule_strengths,
        })
    );
    Ok(())
}

#[derive(Args)]
pub struct FuzzyEvalArgs {
    /// Rule base JSON
    #[arg(long)]
    rulebase: PathBuf,
    /// Crisp inputs as name=value, repeated
    #[arg(long = "input", value_name = "NAME=VALUE")]
    inputs: Vec<String>,
    /// Write the aggregated output distributions as CSV
    #[arg(long)]
    dump_dist: Option<PathBuf>,
}

pub fn fuzzy_eval(args: FuzzyEvalArgs) -> Result<()> {
    let rb = at_path(&args.rulebase, RuleBase::load_json(&args.rulebase))?;
    let mut inputs = BTreeMap::new();
    for spec in &args.inputs {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| usage_msg(format!("bad --input {spec:?}, expected name=value")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| usage_msg(format!("bad value in --input {spec:?}")))?;
        inputs.insert(name.to_string(), value);
    }
    let dists = infer(&rb, &inputs).map_err(usage)?;

    let mut outputs = serde_json::Map::new();
    for (name, dist) in &dists {
        let crisp = match rb.defuzz {
            Defuzz::Centroid => defuzz_centroid(dist),
            Defuzz::MeanOfMax => defuzz_mean_of_max(dist),
        };
        // An output no rule touched has no crisp value.
        outputs.insert(name.clone(), crisp.map(|v| json!(v)).unwrap_or(json!(null)));
    }

    if let Some(path) = &args.dump_dist {
        let mut csv = String::from("variable,z,membership\n");
        for (name, dist) in &dists {
            for (j, &u) in dist.samples.iter().enumerate() {
                csv.push_str(&format!("{name},{},{u}\n", dist.position(j)));
            }
        }
        at_path(path, fs::write(path, csv))?;
    }
    println!("{:#}", json!({ "defuzz": rb.defuzz.to_string(), "outputs": outputs }));
    Ok(())
}

#[derive(Args)]
pub struct LutArgs {
    /// LUT CSV with header computed_m,true_m
    #[arg(long)]
    input: PathBuf,
    /// Also refine this computed depth and print the result
    #[arg(long)]
    eval: Option<f64>,
}

pub fn lut(args: LutArgs) -> Result<()> {
    let lut = at_path(&args.input, DepthLut::load_csv(&args.input))?;
    let entries = lut.entries();
    let mut output = json!({
        "entries": entries.len(),
        "computed_range": [entries.first().map(|e| e.computed_m), entries.last().map(|e| e.computed_m)],
        "true_range": [entries.first().map(|e| e.true_m), entries.last().map(|e| e.true_m)],
    });
    if let Some(x) = args.eval {
        output["refined"] = json!(lut.refine(x).map_err(usage)?);
    }
    println!("{output:#}");
    Ok(())
}

#[derive(Args)]
pub struct SimArgs {
    /// Built-in scenario: corridor, doorway, or intruder
    #[arg(long, conflicts_with = "scene")]
    scenario: Option<String>,
    /// Scene JSON ({boxes: [{min, max, seed}], bounds})
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Maximum episode steps
    #[arg(long)]
    steps: Option<usize>,
    /// Control period in seconds
    #[arg(long)]
    dt: Option<f64>,
    /// Forward speed in m/s (scene-file episodes)
    #[arg(long, default_value_t = 0.8)]
    speed: f64,
    /// Render/noise seed
    #[arg(long)]
    seed: Option<u64>,
    /// Rule preset for the controller
    #[arg(long, default_value = "paper-corrected")]
    rules: String,
    /// Worker threads for the depth pipeline (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Write per-step debug frames (left view + command arrow) as PPM
    #[arg(long)]
    frames: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

pub fn sim(args: SimArgs) -> Result<()> {
    let (scene, start, mut cfg) = match (&args.scenario, &args.scene) {
        (Some(name), None) => scenario_by_name(name).ok_or_else(|| {
            usage_msg(format!("unknown scenario {name:?}, expected one of {SCENARIO_NAMES:?}"))
        })?,
        (None, Some(path)) => {
            let scene = at_path(path, Scene::load_json(path))?;
            let rig = CameraRig::centered(0.12, 450.0, 640, 360).map_err(usage)?;
            let start = VehicleState::level([0.5, 0.0, 1.5], 0.0, args.speed);
            let cfg = stereo_avoid_core::sim::EpisodeConfig::new(rig);
            (scene, start, cfg)
        }
        _ => return Err(usage_msg("need exactly one of --scenario or --scene")),
    };
    if let Some(steps) = args.steps {
        cfg.max_steps = steps;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.workers = args.workers;
    cfg.controller.preset = args.rules.parse().map_err(usage)?;
    cfg.validate().map_err(usage)?;
    scene.validate().map_err(usage)?;

    let log = run_episode(&scene, &start, &cfg);

    at_path(&args.out_dir, fs::create_dir_all(&args.out_dir))?;
    let trajectory_path = args.out_dir.join("trajectory.csv");
    at_path(&trajectory_path, log.save_csv(&trajectory_path))?;

    if args.frames {
        let frames_dir = args.out_dir.join("frames");
        at_path(&frames_dir, fs::create_dir_all(&frames_dir))?;
        for (i, step) in log.steps.iter().enumerate() {
            let pair = render_stereo(&scene, &step.state, &cfg.rig, cfg.noise_stddev, cfg.seed);
            let mut frame = RgbImage::from_gray(&pair.left);
            draw::command_arrow(&mut frame, step.command.pitch, step.command.yaw);
            let path = frames_dir.join(format!("frame_{i:04}.ppm"));
            at_path(&path, frame.save_ppm(&path))?;
        }
    }

    let last = log.steps.last();
    println!(
        "{:#}",
        json!({
            "steps": log.steps.len(),
            "collided": log.collided(),
            "final_position": last.map(|s| s.state.position),
            "trajectory": trajectory_path,
        })
    );
    Ok(())
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 640)]
    width: u32,
    #[arg(long, default_value_t = 360)]
    height: u32,
    #[arg(long, default_value_t = 64)]
    max_disp: u32,
    /// Comma-separated worker counts; must include 1 as the baseline
    #[arg(long, default_value = "1,2,4,8")]
    workers: String,
    /// Also write the report JSON here
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn bench(args: BenchArgs) -> Result<()> {
    let counts: Vec<usize> = args
        .workers
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| usage_msg(format!("bad worker count {s:?}"))))
        .collect::<Result<_>>()?;
    if counts.len() < 2 || !counts.contains(&1) {
        return Err(usage_msg("--workers needs at least two counts including 1"));
    }
    if counts.iter().any(|&c| c == 0) {
        return Err(usage_msg("worker counts must be nonzero"));
    }

    let rig = CameraRig::centered(0.12, 450.0, args.width, args.height).map_err(usage)?;
    let (scene, start, _) = scenario_by_name("doorway").expect("built-in scenario");
    let pair = render_stereo(&scene, &start, &rig, 0.0, 17);
    let params = MatchParams { max_disparity_px: args.max_disp, ..MatchParams::default() };
    let side = center_region_px(rig.focal_px, 0.5, 1.5).map_err(usage)?;
    let grid = make_grid(rig.width_px, rig.height_px, side.min(rig.height_px.min(rig.width_px) / 2))
        .map_err(usage)?;
    let lut = DepthLut::identity();

    let reference = fused_pipeline(&pair, &params, &grid, &lut, 1);

    // Unfused composition must agree bit for bit.
    let unfused_depth = lut.refine_map(&disparity_to_depth(&block_match(&pair, &params, 1), &pair.rig));
    let unfused_regions = region_min_depths(&unfused_depth, &grid).map_err(usage)?;
    let fused_equals_unfused = reference.0 == unfused_depth && reference.1 == unfused_regions;

    let mut runs = Vec::new();
    let mut equal_across_workers = true;
    for &workers in &counts {
        fused_pipeline(&pair, &params, &grid, &lut, workers); // warm-up
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t0 = Instant::now();
            let out = fused_pipeline(&pair, &params, &grid, &lut, workers);
            best = best.min(t0.elapsed().as_secs_f64());
            if out != reference {
                equal_across_workers = false;
            }
        }
        runs.push((workers, best));
    }

    let baseline = runs.iter().find(|(w, _)| *w == 1).expect("baseline present").1;
    let report = json!({
        "width": args.width,
        "height": args.height,
        "max_disparity": args.max_disp,
        "seconds_per_workers": runs.iter().map(|(w, t)| json!({"workers": w, "seconds": t})).collect::<Vec<_>>(),
        "speedup_vs_1": runs
            .iter()
            .map(|(w, t)| (w.to_string(), json!(baseline / t)))
            .collect::<serde_json::Map<_, _>>(),
        "fused_equals_unfused": fused_equals_unfused,
        "equal_across_workers": equal_across_workers,
    });
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    println!("{report:#}");

    if !fused_equals_unfused || !equal_across_workers {
        return Err(compute_msg(
            "determinism violation: fused/unfused or per-worker outputs disagree",
        ));
    }
    Ok(())
}
