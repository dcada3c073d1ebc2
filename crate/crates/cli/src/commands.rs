use std::fs;
use std::path::{Path, PathBuf};

use dynhd::data::{
    load_csv, projection_gain, split, synth_blobs_with_counts, write_csv, Dataset, Fractions, LabelMap,
    NormalizationSpec,
};
use dynhd::hdc::{write_atomic, ModelBundle};
use dynhd::learner::{train_with_observer, TrainConfig};
use dynhd::metrics::{self, one_vs_rest_scores, roc_curve, RocCurve, ScoreKind};
use dynhd::regen::{write_scores_csv, Weights};
use dynhd::robustness::{noise_sweep, write_sweep_csv, NoiseCell, NoiseGrid, SweepTarget};
use dynhd::{HdError, Matrix};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{Common, EvalCmd, NoiseCmd, RocCmd, SweepCmd, SynthCmd, TrainCmd};
use crate::config::{DataConfig, RunConfig};
use crate::error::{CliError, CliResult, ConfigContext};

pub const CONFIG_FILE: &str = "config.toml";
pub const MODEL_FILE: &str = "model.json";
pub const NORM_FILE: &str = "normalization.json";
pub const LABELS_FILE: &str = "labels.json";

/// Creates the output directory and echoes the resolved config into it.
fn start(common: &Common, command: &str, cfg: RunConfig) -> CliResult<(RunConfig, PathBuf)> {
    common.init_threads()?;
    let cfg = cfg.finish()?;
    let out = common.out_dir(command);
    fs::create_dir_all(&out).map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))?;
    write_text(&out, CONFIG_FILE, &cfg.to_toml()?)?;
    log::info!("{command}: writing to {}", out.display());
    Ok((cfg, out))
}

fn write_text(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    write_atomic(&dir.join(name), text.as_bytes()).map_err(Into::into)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(HdError::from)?;
    text.push('\n');
    write_text(dir, name, &text)
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> CliResult<&'a PathBuf> {
    p.as_ref().ok_or_else(|| CliError::Config(format!("{what} is not set")))
}

fn read_file(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Normalized splits plus the artifacts needed to reproduce them.
struct Prepared {
    train: Dataset,
    valid: Option<Dataset>,
    test: Option<Dataset>,
    spec: NormalizationSpec,
    labels: LabelMap,
}

fn non_empty(ds: Dataset) -> Option<Dataset> {
    (!ds.is_empty()).then_some(ds)
}

fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    let d = &cfg.data;
    let opts = d.csv_options()?;
    let full = load_csv(require(&d.train, "data.train")?, &opts, None)?;
    let labels = LabelMap {
        names: full.class_names.clone(),
    };
    let [a, b, c] = d.split;
    let fractions = Fractions::new(a, b, c).config_err()?;
    let (train, valid, test) = split(&full, fractions, d.stratified, cfg.seed).config_err()?;
    let valid = match &d.valid {
        Some(p) => Some(load_csv(p, &opts, Some(&labels))?),
        None => non_empty(valid),
    };
    let test = match &d.test {
        Some(p) => Some(load_csv(p, &opts, Some(&labels))?),
        None => non_empty(test),
    };
    let gain = d.gain.unwrap_or_else(|| projection_gain(train.num_features()));
    let spec = NormalizationSpec::fit(&train, d.normalize)?.with_gain(gain);
    Ok(Prepared {
        train: spec.apply(&train)?,
        valid: valid.map(|v| spec.apply(&v)).transpose()?,
        test: test.map(|t| spec.apply(&t)).transpose()?,
        spec,
        labels,
    })
}

fn accuracy_on(bundle: &ModelBundle, ds: &Dataset) -> CliResult<f64> {
    let enc = bundle.encoder.encode_batch(&ds.features)?;
    let pred = dynhd::learner::predict_all(&bundle.model, &enc)?;
    Ok(metrics::accuracy(&pred, &ds.labels)?)
}

#[derive(Serialize)]
struct TrainSummary {
    iterations: usize,
    converged: bool,
    dim: usize,
    effective_dim: usize,
    train_accuracy: f64,
    valid_accuracy: Option<f64>,
    test_accuracy: Option<f64>,
}

pub fn train(args: TrainCmd) -> CliResult<()> {
    let mut cfg = args.common.base_config()?;
    args.data.apply(&mut cfg);
    args.train.apply(&mut cfg);
    let (cfg, out) = start(&args.common, "train", cfg)?;
    let prep = prepare(&cfg)?;

    if args.dump_regen {
        fs::create_dir_all(out.join("regen")).map_err(HdError::from)?;
    }
    let regen_dir = out.join("regen");
    let trained = train_with_observer(&cfg.train, &prep.train, prep.valid.as_ref(), |rec, analysis| {
        if let (true, Some(a)) = (args.dump_regen, analysis) {
            let mut buf = Vec::new();
            write_scores_csv(&mut buf, a)?;
            write_atomic(&regen_dir.join(format!("iter_{:04}.csv", rec.iteration)), &buf)?;
        }
        Ok(())
    })?;

    let report = trained.report;
    let bundle = ModelBundle::new(trained.encoder, trained.model)?;
    let last = report.records.last().expect("at least one iteration");
    let summary = TrainSummary {
        iterations: report.iterations,
        converged: report.converged,
        dim: cfg.train.dim,
        effective_dim: last.effective_dim,
        train_accuracy: last.train_acc,
        valid_accuracy: last.valid_acc,
        test_accuracy: prep.test.as_ref().map(|t| accuracy_on(&bundle, t)).transpose()?,
    };
    bundle.save(&out.join(MODEL_FILE))?;
    write_text(&out, NORM_FILE, &prep.spec.to_json()?)?;
    write_text(&out, LABELS_FILE, &prep.labels.to_json()?)?;
    write_text(&out, "report.jsonl", &report.to_jsonl()?)?;
    write_json(&out, "summary.json", &summary)
}

/// Artifacts of a `train` output directory.
struct ModelDir {
    bundle: ModelBundle,
    spec: NormalizationSpec,
    labels: LabelMap,
}

fn load_model_dir(dir: &Path) -> CliResult<ModelDir> {
    let model_path = dir.join(MODEL_FILE);
    let bundle = ModelBundle::from_json(&read_file(&model_path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", model_path.display())))?;
    let spec = NormalizationSpec::from_json(&read_file(&dir.join(NORM_FILE))?)?;
    let labels = LabelMap::from_json(&read_file(&dir.join(LABELS_FILE))?)?;
    Ok(ModelDir { bundle, spec, labels })
}

/// Loads a labelled CSV against a model's label map and encodes it.
fn encode_for(md: &ModelDir, path: &Path, data: &DataConfig, pre_encoded: bool) -> CliResult<(Matrix, Vec<usize>)> {
    let ds = load_csv(path, &data.csv_options()?, Some(&md.labels))?;
    if pre_encoded {
        if ds.num_features() != md.bundle.model.dim() {
            return Err(HdError::Dimension {
                context: "encoded input (D)",
                expected: md.bundle.model.dim(),
                found: ds.num_features(),
            }
            .into());
        }
        return Ok((ds.features, ds.labels));
    }
    if ds.num_features() != md.bundle.encoder.features() {
        return Err(HdError::Dimension {
            context: "input features (n)",
            expected: md.bundle.encoder.features(),
            found: ds.num_features(),
        }
        .into());
    }
    let ds = md.spec.apply(&ds)?;
    let enc = md.bundle.encoder.encode_batch(&ds.features)?;
    Ok((enc, ds.labels))
}

fn check_ks(ks: &[usize], classes: usize) -> CliResult<()> {
    match ks.iter().find(|&&k| k == 0 || k > classes) {
        Some(k) => Err(CliError::Config(format!("k = {k} outside 1..={classes}"))),
        None if ks.is_empty() => Err(CliError::Config("eval.k is empty".into())),
        None => Ok(()),
    }
}

pub fn eval(args: EvalCmd) -> CliResult<()> {
    let mut cfg = args.common.base_config()?;
    args.data.apply(&mut cfg);
    if args.model_dir.is_some() {
        cfg.eval.model = args.model_dir.clone();
    }
    if args.dataset.is_some() {
        cfg.eval.data = args.dataset.clone();
    }
    if let Some(k) = &args.k {
        cfg.eval.k = k.clone();
    }
    if args.encoded {
        cfg.eval.encoded = true;
    }
    let (cfg, out) = start(&args.common, "eval", cfg)?;
    let md = load_model_dir(require(&cfg.eval.model, "eval.model")?)?;
    check_ks(&cfg.eval.k, md.bundle.model.num_classes())?;
    let (enc, labels) = encode_for(&md, require(&cfg.eval.data, "eval.data")?, &cfg.data, cfg.eval.encoded)?;
    let report = metrics::evaluate(&md.bundle.model, &enc, &labels, &cfg.eval.k)?;
    write_json(&out, "eval.json", &report)
}

/// One-vs-rest curve per class that has both positives and negatives.
fn roc_per_class(
    model: &dynhd::hdc::ClassModel,
    enc: &Matrix,
    labels: &[usize],
    classes: &[usize],
    kind: ScoreKind,
) -> CliResult<Vec<(usize, RocCurve)>> {
    let mut curves = Vec::new();
    for &c in classes {
        let truth: Vec<bool> = labels.iter().map(|&l| l == c).collect();
        if truth.iter().all(|&t| t) || !truth.iter().any(|&t| t) {
            log::warn!("class {c} lacks positives or negatives; no ROC curve");
            continue;
        }
        let scores = one_vs_rest_scores(model, enc, c, kind)?;
        curves.push((c, roc_curve(&scores, &truth)?));
    }
    Ok(curves)
}

fn macro_auc(curves: &[(usize, RocCurve)]) -> Option<f64> {
    (!curves.is_empty()).then(|| curves.iter().map(|(_, r)| r.auc).sum::<f64>() / curves.len() as f64)
}

fn roc_long_csv(curves: &[(usize, RocCurve)]) -> String {
    let mut s = String::from("class,fpr,tpr\n");
    for (c, r) in curves {
        for (f, t) in &r.points {
            s.push_str(&format!("{c},{f},{t}\n"));
        }
    }
    s
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct SweepRow {
    point: [f64; 3],
    accuracy: f64,
    macro_sensitivity: Option<f64>,
    macro_specificity: Option<f64>,
    auc: Option<f64>,
    curves: Vec<(usize, RocCurve)>,
}

pub fn sweep_weights(args: SweepCmd) -> CliResult<()> {
    let mut cfg = args.common.base_config()?;
    args.data.apply(&mut cfg);
    args.train.apply(&mut cfg);
    if let Some(p) = &args.points {
        cfg.sweep.points = p.clone();
    }
    if let Some(s) = args.score {
        cfg.sweep.score = s;
    }
    if cfg.sweep.points.is_empty() {
        return Err(CliError::Config("sweep.points is empty".into()));
    }
    let bad: Vec<String> = cfg
        .sweep
        .points
        .iter()
        .enumerate()
        .filter_map(|(i, &[a, b, t])| {
            Weights::new(a, b, t)
                .err()
                .map(|e| format!("#{i} (alpha={a}, beta={b}, theta={t}): {e}"))
        })
        .collect();
    if !bad.is_empty() {
        return Err(CliError::Config(format!("invalid grid points: {}", bad.join("; "))));
    }
    let (cfg, out) = start(&args.common, "sweep-weights", cfg)?;
    let prep = prepare(&cfg)?;
    let eval_set = prep
        .test
        .as_ref()
        .or(prep.valid.as_ref())
        .ok_or_else(|| CliError::Config("sweep needs a test or validation split".into()))?;
    let classes: Vec<usize> = (0..prep.train.num_classes()).collect();

    let rows = cfg
        .sweep
        .points
        .par_iter()
        .map(|&point| -> CliResult<SweepRow> {
            let [alpha, beta, theta] = point;
            let tc = TrainConfig {
                alpha,
                beta,
                theta,
                ..cfg.train.clone()
            };
            let t = dynhd::learner::train(&tc, &prep.train, prep.valid.as_ref())?;
            let enc = t.encoder.encode_batch(&eval_set.features)?;
            let rep = metrics::evaluate(&t.model, &enc, &eval_set.labels, &[1])?;
            let curves = roc_per_class(&t.model, &enc, &eval_set.labels, &classes, cfg.sweep.score)?;
            Ok(SweepRow {
                point,
                accuracy: rep.accuracy,
                macro_sensitivity: rep.macro_sensitivity,
                macro_specificity: rep.macro_specificity,
                auc: macro_auc(&curves),
                curves,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut csv = String::from("alpha,beta,theta,accuracy,macro_sensitivity,macro_specificity,auc\n");
    for (i, r) in rows.iter().enumerate() {
        let [a, b, t] = r.point;
        csv.push_str(&format!(
            "{a},{b},{t},{},{},{},{}\n",
            r.accuracy,
            opt_cell(r.macro_sensitivity),
            opt_cell(r.macro_specificity),
            opt_cell(r.auc)
        ));
        write_text(&out, &format!("roc_{i}.csv"), &roc_long_csv(&r.curves))?;
    }
    write_text(&out, "sweep.csv", &csv)
}

#[derive(Serialize)]
struct OrderingCheck {
    check: &'static str,
    rate: f64,
    better: String,
    better_loss: f64,
    worse: String,
    worse_loss: f64,
    holds: bool,
}

/// Precision and dimensionality trend checks at every nonzero rate.
fn ordering_checks(cells: &[NoiseCell]) -> Vec<OrderingCheck> {
    let find = |d: usize, b: u8, r: f64| cells.iter().find(|c| c.dim == d && c.bits == b && c.rate == r);
    let dims: Vec<usize> = cells.iter().map(|c| c.dim).collect();
    let bits: Vec<u8> = cells.iter().map(|c| c.bits).collect();
    let (Some(&d_lo), Some(&d_hi), Some(&b_lo), Some(&b_hi)) =
        (dims.iter().min(), dims.iter().max(), bits.iter().min(), bits.iter().max())
    else {
        return Vec::new();
    };
    let mut rates: Vec<f64> = cells.iter().map(|c| c.rate).filter(|&r| r > 0.0).collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    let mut checks = Vec::new();
    for r in rates {
        if b_lo != b_hi {
            if let (Some(lo), Some(hi)) = (find(d_hi, b_lo, r), find(d_hi, b_hi, r)) {
                checks.push(OrderingCheck {
                    check: "precision",
                    rate: r,
                    better: format!("D={d_hi} bits={b_lo}"),
                    better_loss: lo.mean_loss,
                    worse: format!("D={d_hi} bits={b_hi}"),
                    worse_loss: hi.mean_loss,
                    holds: lo.mean_loss < hi.mean_loss,
                });
            }
        }
        if d_lo != d_hi {
            if let (Some(big), Some(small)) = (find(d_hi, b_hi, r), find(d_lo, b_hi, r)) {
                checks.push(OrderingCheck {
                    check: "dimensionality",
                    rate: r,
                    better: format!("D={d_hi} bits={b_hi}"),
                    better_loss: big.mean_loss,
                    worse: format!("D={d_lo} bits={b_hi}"),
                    worse_loss: small.mean_loss,
                    holds: big.mean_loss < small.mean_loss,
                });
            }
        }
    }
    checks
}

pub fn noise(args: NoiseCmd) -> CliResult<()> {
    let mut cfg = args.common.base_config()?;
    args.data.apply(&mut cfg);
    if !args.model_dirs.is_empty() {
        cfg.noise.models = args.model_dirs.clone();
    }
    if args.dataset.is_some() {
        cfg.noise.data = args.dataset.clone();
    }
    if let Some(d) = &args.dims {
        cfg.noise.dims = d.clone();
    }
    if let Some(b) = &args.bits {
        cfg.noise.bits = b.clone();
    }
    if let Some(r) = &args.rates {
        cfg.noise.rates = r.clone();
    }
    if let Some(t) = args.trials {
        cfg.noise.trials = t;
    }
    if cfg.noise.models.is_empty() {
        return Err(CliError::Config("noise.models is empty".into()));
    }
    let (cfg, out) = start(&args.common, "noise", cfg)?;
    let data_path = require(&cfg.noise.data, "noise.data")?;
    let mut targets = Vec::new();
    for dir in &cfg.noise.models {
        let md = load_model_dir(dir)?;
        let (encoded, labels) = encode_for(&md, data_path, &cfg.data, false)?;
        targets.push(SweepTarget {
            model: md.bundle.model,
            encoded,
            labels,
        });
    }
    let dims = if cfg.noise.dims.is_empty() {
        targets.iter().map(SweepTarget::dim).collect()
    } else {
        cfg.noise.dims.clone()
    };
    let grid = NoiseGrid {
        dims,
        bits: cfg.noise.bits.clone(),
        rates: cfg.noise.rates.clone(),
    };
    let cells = noise_sweep(&targets, &grid, cfg.noise.trials, cfg.seed).map_err(|e| match e {
        HdError::Config(m) => CliError::Data(m),
        HdError::InvalidArgument(m) => CliError::Config(m),
        other => other.into(),
    })?;
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &cells)?;
    write_atomic(&out.join("noise.csv"), &buf)?;
    write_json(&out, "noise_summary.json", &ordering_checks(&cells))
}

#[derive(Serialize)]
struct RocSummary {
    score: ScoreKind,
    classes: Vec<ClassAuc>,
    macro_auc: Option<f64>,
}

#[derive(Serialize)]
struct ClassAuc {
    class: usize,
    label: String,
    auc: f64,
}

pub fn roc(args: RocCmd) -> CliResult<()> {
    let mut cfg = args.common.base_config()?;
    args.data.apply(&mut cfg);
    if args.model_dir.is_some() {
        cfg.roc.model = args.model_dir.clone();
    }
    if args.dataset.is_some() {
        cfg.roc.data = args.dataset.clone();
    }
    if args.class.is_some() {
        cfg.roc.class = args.class;
    }
    if let Some(s) = args.score {
        cfg.roc.score = s;
    }
    let (cfg, out) = start(&args.common, "roc", cfg)?;
    let md = load_model_dir(require(&cfg.roc.model, "roc.model")?)?;
    let k = md.bundle.model.num_classes();
    let classes: Vec<usize> = match cfg.roc.class {
        Some(c) if c >= k => return Err(CliError::Config(format!("class {c} outside 0..{k}"))),
        Some(c) => vec![c],
        None => (0..k).collect(),
    };
    let (enc, labels) = encode_for(&md, require(&cfg.roc.data, "roc.data")?, &cfg.data, false)?;
    let curves = roc_per_class(&md.bundle.model, &enc, &labels, &classes, cfg.roc.score)?;
    if curves.is_empty() {
        return Err(CliError::Data("no class has both positive and negative samples".into()));
    }
    write_text(&out, "roc.csv", &roc_long_csv(&curves))?;
    let summary = RocSummary {
        score: cfg.roc.score,
        classes: curves
            .iter()
            .map(|(c, r)| ClassAuc {
                class: *c,
                label: md.labels.names[*c].clone(),
                auc: r.auc,
            })
            .collect(),
        macro_auc: macro_auc(&curves),
    };
    write_json(&out, "roc.json", &summary)
}

pub fn synth(args: SynthCmd) -> CliResult<()> {
    let mut cfg = args.common.base_config()?;
    let s = &mut cfg.synth;
    if let Some(v) = args.features {
        s.features = v;
    }
    if let Some(v) = args.classes {
        s.classes = v;
    }
    if let Some(v) = args.per_class {
        s.per_class = v;
    }
    if let Some(v) = &args.counts {
        s.counts = v.clone();
    }
    if let Some(v) = args.separation {
        s.separation = v;
    }
    let (cfg, out) = start(&args.common, "synth", cfg)?;
    let s = &cfg.synth;
    let counts = if s.counts.is_empty() {
        vec![s.per_class; s.classes]
    } else {
        s.counts.clone()
    };
    let ds = synth_blobs_with_counts(s.features, &counts, s.separation, cfg.seed).config_err()?;
    write_csv(&ds, &out.join("data.csv"))?;
    Ok(())
}
