// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Subcommands.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use frontier_core::center::{center_set, normal_chord_set, parallel_pairs};
use frontier_core::classify::{
    format_partition, germ_at, multigerm_label, new_cases, nice_dimension_check, partition_table,
};
use frontier_core::conflict::{conflict_set, oriented_conflict_set, symmetry_set, ConflictPoint, ConflictSet};
use frontier_core::kite::{collinearity_residual, kite_curve};
use frontier_core::propagation::{critical_footpoints, front_cusps, momental_front, travel_time_jet};
use frontier_core::{ContinuationSettings, Scene};
use rand::{Rng, SeedableRng};

use crate::render;
use crate::scene_file::load_scene;
use crate::table::{Table, Value};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "frontier", version, about = "Conflict sets of wavefronts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct SceneArgs {
    /// Scene JSON file.
    #[arg(long)]
    scene: PathBuf,
    /// Ambient box `lo1,hi1,lo2,hi2[,lo3,hi3]`; defaults to the padded
    /// bounding box of the surfaces.
    #[arg(long = "box", allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for jittering the seeding grid; 0 keeps the regular grid.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    step_max: Option<f64>,
    #[arg(long)]
    newton_tol: Option<f64>,
    /// Write only the CSV table.
    #[arg(long)]
    no_render: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conflict set of all surfaces.
    Conflict(SceneArgs),
    /// Conflict set along the oriented conormals, at signed times.
    OrientedConflict(SceneArgs),
    /// Symmetry set of a single surface.
    Symmetry(SceneArgs),
    /// Center set from parallel-normal pairs.
    Center {
        #[command(flatten)]
        scene: SceneArgs,
        /// Weights `a1,a2[,a3]`; default is the plain centroid.
        #[arg(long, allow_hyphen_values = true)]
        weights: Option<String>,
    },
    /// Normal chord set from parallel-normal pairs.
    Chords(SceneArgs),
    /// Kite curve of the conflict set, with a collinearity report.
    Kite(SceneArgs),
    /// Momental fronts at a given time.
    Front {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, allow_hyphen_values = true)]
        time: f64,
        /// Parameter samples per axis.
        #[arg(long, default_value_t = 256)]
        samples: usize,
    },
    /// Critical footpoints and germ labels seen from a point.
    Classify {
        #[command(flatten)]
        scene: SceneArgs,
        /// The point `x1,x2[,x3]`.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Admissible codimension tuples for `l` germs in `R^n`.
    Partitions {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        /// Only the cases that do not reduce to smaller `(n, l)`.
        #[arg(long)]
        new_cases: bool,
    },
    /// Recomputes transversality margins along a conflict CSV.
    Check {
        #[command(flatten)]
        scene: SceneArgs,
        /// A table written by `conflict`, `oriented-conflict` or `symmetry`.
        #[arg(long)]
        trace: PathBuf,
    },
}

/// A parsed command line.
#[derive(Debug)]
pub struct RunConfig {
    command: Command,
}

impl RunConfig {
    pub fn parse<I, T>(argv: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        Ok(RunConfig { command: Cli::try_parse_from(argv)?.command })
    }

    pub fn subcommand(&self) -> &'static str {
        match self.command {
            Command::Conflict(_) => "conflict",
            Command::OrientedConflict(_) => "oriented-conflict",
            Command::Symmetry(_) => "symmetry",
            Command::Center { .. } => "center",
            Command::Chords(_) => "chords",
            Command::Kite(_) => "kite",
            Command::Front { .. } => "front",
            Command::Classify { .. } => "classify",
            Command::Partitions { .. } => "partitions",
            Command::Check { .. } => "check",
        }
    }
}

fn parse_reals(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::Validation(format!("{what}: expected comma-separated reals, got '{text}'")))
}

/// A loaded scene with the solver settings and box of one run.
struct Job {
    scene: Scene,
    settings: ContinuationSettings,
    bounds: Vec<(f64, f64)>,
    out: PathBuf,
    render: bool,
}

impl Job {
    fn new(args: &SceneArgs) -> Result<Self, CliError> {
        let mut scene = load_scene(&args.scene)?;
        let n = scene.ambient_dim();
        if args.seed != 0 {
            let mut rng = rand::rngs::StdRng::seed_from_u64(args.seed);
            scene.options.seed_offset = rng.random_range(-0.5..0.5);
        }
        let mut settings = scene.options.settings.clone();
        if let Some(h) = args.step_max {
            settings = settings.with_step_max(h);
        }
        if let Some(tol) = args.newton_tol {
            settings.newton_tol = tol;
        }
        settings.validate()?;
        let bounds = match &args.bounds {
            Some(text) => {
                let v = parse_reals(text, "--box")?;
                if v.len() != 2 * n {
                    return Err(CliError::Validation(format!("--box needs {} numbers for R^{n}", 2 * n)));
                }
                let b: Vec<(f64, f64)> = v.chunks(2).map(|c| (c[0], c[1])).collect();
                if b.iter().any(|(lo, hi)| !(lo < hi)) {
                    return Err(CliError::Validation(format!("--box is empty: {text}")));
                }
                b
            }
            None => padded(&scene.bounding_box()),
        };
        Ok(Job { scene, settings, bounds, out: args.out.clone(), render: !args.no_render })
    }

    fn n(&self) -> usize {
        self.scene.ambient_dim()
    }

    /// Writes `name.csv` and, unless disabled, the rendering of `columns`.
    fn write(&self, name: &str, table: &Table, columns: &[String], bounds: &[(f64, f64)]) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", self.out.display())))?;
        let mut written = vec![write_file(&self.out.join(format!("{name}.csv")), &table.to_csv())?];
        if self.render && !columns.is_empty() {
            let lines = table.polylines(columns);
            let doc = match columns.len() {
                2 => Some(("svg", render::svg(&lines, bounds).map_err(CliError::Validation)?)),
                3 => Some(("obj", render::obj(&lines).map_err(CliError::Validation)?)),
                _ => None,
            };
            if let Some((ext, text)) = doc {
                written.push(write_file(&self.out.join(format!("{name}.{ext}")), &text)?);
            }
        }
        Ok(written)
    }
}

/// Bounding box grown by half its largest side on every side.
fn padded(bb: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let side = bb.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max).max(1.0);
    bb.iter().map(|(lo, hi)| (lo - 0.5 * side, hi + 0.5 * side)).collect()
}

fn points_box(lines: &[Vec<Vec<f64>>], fallback: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut bb = vec![(f64::INFINITY, f64::NEG_INFINITY); fallback.len()];
    for p in lines.iter().flatten() {
        for (b, v) in bb.iter_mut().zip(p).filter(|(_, v)| v.is_finite()) {
            *b = (b.0.min(*v), b.1.max(*v));
        }
    }
    if bb.iter().any(|(lo, hi)| !(lo < hi)) {
        return fallback.to_vec();
    }
    bb
}

fn write_file(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

fn names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}{k}")).collect()
}

/// `branch, t, x1..xn, s<k>_<a>.., margin, germ`.
pub fn conflict_table(set: &ConflictSet, n: usize, slots: usize) -> Table {
    let mut header = vec!["branch".to_string(), "t".to_string()];
    header.extend(names("x", n));
    for k in 1..=slots {
        header.extend(names(&format!("s{k}_"), n - 1));
    }
    header.push("margin".into());
    header.push("germ".into());
    let mut table = Table::new(header);
    let groups = set.branches.iter().map(|b| b.points.as_slice()).chain(set.clusters.iter().map(core::slice::from_ref));
    for (id, points) in groups.enumerate() {
        for cp in points {
            let mut row = vec![Value::Int(id as i64), Value::Real(cp.t)];
            row.extend(cp.x.iter().map(|&v| Value::Real(v)));
            row.extend(cp.footpoints.iter().flatten().map(|&v| Value::Real(v)));
            row.push(Value::Real(cp.margin));
            row.push(Value::Text(cp.germ_name(n)));
            table.rows.push(row);
        }
    }
    table
}

fn require_branches(set: &ConflictSet) -> Result<(), CliError> {
    if set.branches.is_empty() && set.clusters.is_empty() {
        if let Some((_, e)) = set.failures.first() {
            return Err(CliError::Solver(format!("no branch traced; {} seed(s) failed, first: {e}", set.failures.len())));
        }
    }
    Ok(())
}

fn report(out: &mut dyn Write, what: &str, branches: usize, rows: usize, files: &[PathBuf]) -> Result<(), CliError> {
    let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    writeln!(out, "{what}: {branches} branch(es), {rows} vertices -> {}", files.join(", "))
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Validation(e.to_string()))
}

enum SetKind {
    Unoriented,
    Oriented,
    Symmetry,
}

fn run_set(args: &SceneArgs, kind: SetKind, out: &mut dyn Write) -> Result<(), CliError> {
    let job = Job::new(args)?;
    let (name, set, slots) = match kind {
        SetKind::Unoriented => ("conflict", conflict_set(&job.scene, &job.bounds, &job.settings)?, job.scene.len()),
        SetKind::Oriented => {
            ("oriented_conflict", oriented_conflict_set(&job.scene, &job.bounds, &job.settings)?, job.scene.len())
        }
        SetKind::Symmetry => ("symmetry", symmetry_set(&job.scene, &job.bounds, &job.settings)?, 2),
    };
    require_branches(&set)?;
    let table = conflict_table(&set, job.n(), slots);
    let files = job.write(name, &table, &names("x", job.n()), &job.bounds)?;
    report(out, name, set.branches.len() + set.clusters.len(), table.rows.len(), &files)
}

fn pair_surfaces(scene: &Scene) -> Vec<usize> {
    if scene.len() == 1 {
        vec![0, 0]
    } else {
        (0..scene.len()).collect()
    }
}

fn run_center(args: &SceneArgs, weights: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    let job = Job::new(args)?;
    let weights = weights.map(|w| parse_reals(w, "--weights")).transpose()?;
    let surfaces = pair_surfaces(&job.scene);
    let l = surfaces.len();
    let branches = parallel_pairs(&job.scene, surfaces, job.scene.options.separation, &job.settings)?;
    let n = job.n();
    let mut header = vec!["branch".to_string()];
    header.extend(names("y", n));
    for k in 1..=l {
        header.extend(names(&format!("s{k}_"), n - 1));
    }
    header.extend(names("sign", l));
    header.push("margin".into());
    let mut table = Table::new(header);
    let mut count = 0;
    for br in &branches {
        let Some(ys) = center_set(br, weights.as_deref())? else { continue };
        for (pair, y) in br.pairs.iter().zip(ys) {
            let mut row = vec![Value::Int(count)];
            row.extend(y.into_iter().map(Value::Real));
            row.extend(pair.params.iter().flatten().map(|&v| Value::Real(v)));
            row.extend(pair.signs.iter().map(|&v| Value::Int(v as i64)));
            row.push(Value::Real(pair.margin));
            table.rows.push(row);
        }
        count += 1;
    }
    let columns = names("y", n);
    let bounds = points_box(&table.polylines(&columns), &job.bounds);
    let files = job.write("center", &table, &columns, &padded_by(&bounds, 0.1))?;
    report(out, "center", count as usize, table.rows.len(), &files)
}

fn padded_by(bb: &[(f64, f64)], frac: f64) -> Vec<(f64, f64)> {
    let side = bb.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    bb.iter().map(|(lo, hi)| (lo - frac * side, hi + frac * side)).collect()
}

fn run_chords(args: &SceneArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let job = Job::new(args)?;
    let branches = parallel_pairs(&job.scene, pair_surfaces(&job.scene), job.scene.options.separation, &job.settings)?;
    let n = job.n();
    let mut header = vec!["branch".to_string()];
    header.extend(names("v", n));
    header.extend(names("mu1_", n));
    header.extend(names("mu2_", n));
    header.push("normal".into());
    let mut table = Table::new(header);
    for (id, br) in branches.iter().enumerate() {
        for c in normal_chord_set(&br.pairs) {
            let mut row = vec![Value::Int(id as i64)];
            row.extend(c.v.iter().chain(&c.mu1).chain(&c.mu2).map(|&v| Value::Real(v)));
            row.push(Value::Int(c.normal as i64));
            table.rows.push(row);
        }
    }
    let files = job.write("chords", &table, &[], &job.bounds)?;
    report(out, "chords", branches.len(), table.rows.len(), &files)
}

fn run_kite(args: &SceneArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let job = Job::new(args)?;
    let set = conflict_set(&job.scene, &job.bounds, &job.settings)?;
    require_branches(&set)?;
    let n = job.n();
    let mut header = vec!["branch".to_string(), "t".to_string()];
    header.extend(names("x", n));
    header.extend(names("y", n));
    header.push("condition".into());
    let mut table = Table::new(header);
    for (id, br) in set.branches.iter().enumerate() {
        let kites: Vec<_> = kite_curve(br).into_iter().flatten().collect();
        for k in &kites {
            let mut row = vec![Value::Int(id as i64), Value::Real(k.source.t)];
            row.extend(k.source.x.iter().chain(&k.y).map(|&v| Value::Real(v)));
            row.push(Value::Real(k.condition));
            table.rows.push(row);
        }
        let ys: Vec<Vec<f64>> = kites.iter().map(|k| k.y.clone()).collect();
        table.notes.push(format!(
            "collinearity branch={id} points={} residual={:.16e}",
            ys.len(),
            collinearity_residual(&ys)
        ));
    }
    let columns = names("y", n);
    let bounds = points_box(&table.polylines(&columns), &job.bounds);
    let files = job.write("kite", &table, &columns, &padded_by(&bounds, 0.1))?;
    report(out, "kite", set.branches.len(), table.rows.len(), &files)
}

fn run_front(args: &SceneArgs, time: f64, samples: usize, out: &mut dyn Write) -> Result<(), CliError> {
    if !time.is_finite() {
        return Err(CliError::Validation("--time must be finite".into()));
    }
    let job = Job::new(args)?;
    let n = job.n();
    let mut header = vec!["branch".to_string(), "surface".to_string(), "side".to_string(), "t".to_string()];
    header.extend(names("x", n));
    header.extend(names("s", n - 1));
    let mut table = Table::new(header);
    for (i, ss) in job.scene.surfaces().iter().enumerate() {
        let front = momental_front(&ss.surface, &ss.metric, time, samples, true)?;
        for f in &front {
            let side = if f.branch == ss.surface.orientation() { 1 } else { -1 };
            let id = 2 * i as i64 + i64::from(side < 0);
            let mut row = vec![Value::Int(id), Value::Int(i as i64), Value::Int(side), Value::Real(f.t)];
            row.extend(f.x.iter().chain(&f.s).map(|&v| Value::Real(v)));
            table.rows.push(row);
        }
        if ss.surface.param_dim() == 1 {
            for side in [1i64, -1] {
                let cusps = front_cusps(&ss.surface, &ss.metric, side as f64 * time, samples)?;
                let list: Vec<String> = cusps.iter().map(|c| format!("{c:.16e}")).collect();
                table.notes.push(format!("cusps surface={} side={side} s=[{}]", ss.label, list.join(" ")));
            }
        }
    }
    let columns = names("x", n);
    let bounds = points_box(&table.polylines(&columns), &job.bounds);
    let files = job.write("front", &table, &columns, &padded_by(&bounds, 0.05))?;
    report(out, "front", 2 * job.scene.len(), table.rows.len(), &files)
}

fn run_classify(args: &SceneArgs, point: &str, out: &mut dyn Write) -> Result<(), CliError> {
    let job = Job::new(args)?;
    let x = parse_reals(point, "--point")?;
    let n = job.n();
    if x.len() != n {
        return Err(CliError::Validation(format!("--point needs {n} coordinates")));
    }
    let mut text = String::new();
    let mut found = Vec::new();
    for ss in job.scene.surfaces() {
        for s in critical_footpoints(&ss.surface, &ss.metric, &x, job.scene.options.footpoint_samples)? {
            let t = travel_time_jet(&ss.surface, &ss.metric, &x, &s, 1)?.value;
            let g = germ_at(&ss.surface, &ss.metric, &x, &s)?;
            let s_text: Vec<String> = s.iter().map(|v| format!("{v:.16e}")).collect();
            text.push_str(&format!(
                "{} s=[{}] t={t:.16e} germ={} codim={} corank={}\n",
                ss.label,
                s_text.join(" "),
                g.name(),
                g.codim,
                g.corank
            ));
            found.push((t, g));
        }
    }
    // footpoints reached at one common time form a multi-germ
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tol = 1e-8 * found.iter().map(|f| f.0.abs()).fold(1.0, f64::max);
    let mut k = 0;
    while k < found.len() {
        let mut j = k + 1;
        while j < found.len() && found[j].0 - found[k].0 <= tol {
            j += 1;
        }
        if j - k >= 2 {
            let labels: Vec<_> = found[k..j].iter().map(|f| f.1.clone()).collect();
            let m = multigerm_label(&labels, n);
            text.push_str(&format!("multigerm t={:.16e} {} codim={}\n", found[k].0, m.name, m.total_codim));
        }
        k = j;
    }
    emit(out, &text)
}

fn run_partitions(n: usize, l: usize, only_new: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let list = if only_new { new_cases(n, l)? } else { partition_table(n, l)?.partitions };
    let mut text: String = list.iter().map(|p| format_partition(p) + "\n").collect();
    if !only_new {
        let nice = nice_dimension_check(n, l)?;
        text.push_str(&format!("# cap={} nice={}\n", nice.cap, nice.is_nice));
    }
    emit(out, &text)
}

fn run_check(args: &SceneArgs, trace: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let job = Job::new(args)?;
    let n = job.n();
    let text = std::fs::read_to_string(trace)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", trace.display())))?;
    let input = Table::from_csv(&text).map_err(|e| CliError::Validation(format!("{}: {e}", trace.display())))?;
    let column = |name: &str| {
        input.column(name).ok_or_else(|| CliError::Validation(format!("{}: missing column '{name}'", trace.display())))
    };
    let t_col = column("t")?;
    let x_cols = names("x", n).iter().map(|c| column(c)).collect::<Result<Vec<_>, _>>()?;
    let slots = (1..).take_while(|k| input.column(&format!("s{k}_1")).is_some()).count();
    let s_cols = (1..=slots)
        .map(|k| names(&format!("s{k}_"), n - 1).iter().map(|c| column(c)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let surfaces: Vec<usize> = if job.scene.len() == 1 { vec![0; slots] } else { (0..slots).collect() };
    if slots < 2 || surfaces.iter().any(|&i| i >= job.scene.len()) {
        return Err(CliError::Validation(format!("{}: footpoint columns do not match the scene", trace.display())));
    }
    let real = |row: &Vec<Value>, i: usize| {
        row[i].as_f64().ok_or_else(|| CliError::Validation(format!("{}: non-numeric cell", trace.display())))
    };
    let branch_col = input.column("branch");
    let mut header = vec!["branch".to_string()];
    header.extend(names("x", n));
    header.push("margin".into());
    header.push("germ".into());
    let mut table = Table::new(header);
    let mut worst = f64::INFINITY;
    for row in &input.rows {
        let t = real(row, t_col)?;
        let x = x_cols.iter().map(|&i| real(row, i)).collect::<Result<Vec<_>, _>>()?;
        let footpoints = s_cols
            .iter()
            .map(|cols| cols.iter().map(|&i| real(row, i)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let sign = if t < 0.0 { -1.0 } else { 1.0 };
        let cp = ConflictPoint::new(&job.scene, x.clone(), t, surfaces.clone(), footpoints, sign);
        worst = worst.min(cp.margin);
        let mut out_row = vec![branch_col.map_or(Value::Int(0), |b| row[b].clone())];
        out_row.extend(x.into_iter().map(Value::Real));
        out_row.push(Value::Real(cp.margin));
        out_row.push(Value::Text(cp.germ_name(n)));
        table.rows.push(out_row);
    }
    table.notes.push(format!("vertices={} min_margin={worst:.16e}", table.rows.len()));
    let files = job.write("check", &table, &[], &job.bounds)?;
    report(out, "check", input.branches().len(), table.rows.len(), &files)?;
    emit(out, &format!("min margin {worst:.16e}\n"))
}

/// Dispatches a parsed command line.
pub fn execute(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    match &config.command {
        Command::Conflict(a) => run_set(a, SetKind::Unoriented, out),
        Command::OrientedConflict(a) => run_set(a, SetKind::Oriented, out),
        Command::Symmetry(a) => run_set(a, SetKind::Symmetry, out),
        Command::Center { scene, weights } => run_center(scene, weights.as_deref(), out),
        Command::Chords(a) => run_chords(a, out),
        Command::Kite(a) => run_kite(a, out),
        Command::Front { scene, time, samples } => run_front(scene, *time, *samples, out),
        Command::Classify { scene, point } => run_classify(scene, point, out),
        Command::Partitions { n, l, new_cases } => run_partitions(*n, *l, *new_cases, out),
        Command::Check { scene, trace } => run_check(scene, trace, out),
    }
}
