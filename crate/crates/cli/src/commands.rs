use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;

use rdnn_core::analysis::{spectral_cluster, GroupReport};
use rdnn_core::dataio::{load_dataset, load_labels, Dataset, Manifest};
use rdnn_core::metrics::{MetricReport, ScoreTable};
use rdnn_core::relation::{format_matrix, parse_matrix, update_class_relation};
use rdnn_core::synth::{generate, write_synth, SynthSpec};
use rdnn_core::trainer::gradcheck::run_fixture;
use rdnn_core::trainer::{average_scores, train_plan, InputView};
use rdnn_core::{ClassRelation, Error, RdnnModel, SymMatrix};

use crate::args::{ClusterArgs, EvalArgs, GradcheckArgs, SynthArgs, TrainArgs};
use crate::run::{sidecar_manifest, write_json, ModelFile, RunConfig, RunManifest, RUN_MANIFEST};

pub fn train(args: &TrainArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    args.apply(&mut cfg)?;
    cfg.train = cfg
        .train
        .clone()
        .with_mode(cfg.method.train_mode())
        .validated()?;

    let data =
        load_dataset(&args.data).with_context(|| format!("loading {}", args.data.display()))?;
    let net = cfg
        .network
        .config(data.modality_dims(), data.num_categories());
    let plan = cfg.method.plan(&net)?;
    let predictor = train_plan(&plan, &data, &cfg.train)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut manifest = RunManifest::new("train", Some(cfg.train.seed), serde_json::to_value(&cfg)?)
        .input("data", &args.data);
    if let Some(path) = &args.config {
        manifest = manifest.input("config", path);
    }
    let multi = predictor.members.len() > 1;
    let mut reports = Vec::new();
    let mut timings = Vec::new();
    for (i, member) in predictor.members.iter().enumerate() {
        let suffix = if multi {
            format!("_{i}")
        } else {
            String::new()
        };
        let model_name = format!("model{suffix}.rdnm");
        let psi_name = format!("psi{suffix}.txt");
        let omega_name = format!("omega{suffix}.txt");
        let out = &member.outcome;
        fs::write(args.out.join(&model_name), out.model.to_bytes())?;
        fs::write(
            args.out.join(&psi_name),
            format_matrix(out.psi.matrix().as_matrix()),
        )?;
        fs::write(
            args.out.join(&omega_name),
            format_matrix(out.omega.matrix().as_matrix()),
        )?;
        manifest.models.push(ModelFile {
            view: member.view,
            path: model_name.clone(),
        });
        manifest = manifest
            .output(&format!("model{suffix}"), &args.out.join(&model_name))
            .output(&format!("psi{suffix}"), &args.out.join(&psi_name))
            .output(&format!("omega{suffix}"), &args.out.join(&omega_name));
        reports.push(serde_json::to_value(&out.report)?);
        timings.push(json!({ "epoch_seconds": out.report.epoch_seconds }));
    }
    let (report, timing) = if multi {
        (json!({ "members": reports }), json!({ "members": timings }))
    } else {
        (reports.remove(0), timings.remove(0))
    };
    write_json(&args.out.join("report.json"), &report)?;
    write_json(&args.out.join("timing.json"), &timing)?;
    manifest = manifest
        .output("report", &args.out.join("report.json"))
        .output("timing", &args.out.join("timing.json"));
    manifest.write(&args.out.join(RUN_MANIFEST))?;

    for member in &predictor.members {
        let last = member
            .outcome
            .report
            .epochs
            .last()
            .map(|e| e.terms.objective);
        println!(
            "{} {:?}: final objective {}",
            cfg.method.name(),
            member.view,
            last.map_or("n/a".to_owned(), |v| format!("{v:.6}"))
        );
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

/// Loads the member networks of a training run directory (or its `run.json`).
fn load_run_models(run: &Path) -> Result<Vec<(InputView, RdnnModel)>> {
    let (dir, manifest_path) = if run.is_dir() {
        (run.to_path_buf(), run.join(RUN_MANIFEST))
    } else {
        (
            run.parent().unwrap_or(Path::new(".")).to_path_buf(),
            run.to_path_buf(),
        )
    };
    let manifest = RunManifest::load(&manifest_path)?;
    if manifest.subcommand != "train" || manifest.models.is_empty() {
        bail!(Error::Data(format!(
            "{} is not a training run manifest",
            manifest_path.display()
        )));
    }
    manifest
        .models
        .iter()
        .map(|m| Ok((m.view, load_model(&dir.join(&m.path))?)))
        .collect()
}

fn load_model(path: &Path) -> Result<RdnnModel> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    RdnnModel::read_from(std::io::BufReader::new(file))
        .with_context(|| format!("reading model {}", path.display()))
}

fn check_compatible(members: &[(InputView, RdnnModel)], data: &Dataset) -> Result<()> {
    for (view, model) in members {
        if model.num_categories() != data.num_categories() {
            bail!(Error::Shape(format!(
                "model predicts {} categories but the labels have {}",
                model.num_categories(),
                data.num_categories()
            )));
        }
        let dims = view.apply(data)?.modality_dims();
        if dims != model.config.input_dims {
            bail!(Error::Shape(format!(
                "model expects input dims {:?} but the data provides {:?}",
                model.config.input_dims, dims
            )));
        }
    }
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let members = match (&args.run, &args.model) {
        (Some(run), None) => load_run_models(run)?,
        (None, Some(model)) => vec![(InputView::All, load_model(model)?)],
        _ => unreachable!("clap enforces exactly one of --run / --model"),
    };
    let data =
        load_dataset(&args.data).with_context(|| format!("loading {}", args.data.display()))?;
    check_compatible(&members, &data)?;
    let refs: Vec<(InputView, &RdnnModel)> = members.iter().map(|(v, m)| (*v, m)).collect();
    let scores = average_scores(&refs, &data)?;
    let table = ScoreTable::from_predictions(&scores, &data)?;
    let report = MetricReport::build(&table, data.category_names())?;
    println!("mAP: {:.4}", report.map);
    if let Some(out) = &args.out {
        write_json(out, &report)?;
        let mut manifest = RunManifest::new("eval", None, json!({}))
            .input("data", &args.data)
            .output("metrics", out);
        if let Some(run) = &args.run {
            manifest = manifest.input("run", run);
        }
        if let Some(model) = &args.model {
            manifest = manifest.input("model", model);
        }
        manifest.write(&sidecar_manifest(out))?;
    }
    Ok(())
}

fn category_names(manifest: &Path) -> Result<Vec<String>> {
    let m = Manifest::load(manifest).with_context(|| format!("loading {}", manifest.display()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let labels = Path::new(&m.labels);
    let labels = if labels.is_absolute() {
        labels.to_path_buf()
    } else {
        base.join(labels)
    };
    Ok(load_labels(&labels)?.category_names)
}

pub fn cluster(args: &ClusterArgs) -> Result<()> {
    let omega = match (&args.omega, &args.model) {
        (Some(path), None) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ClassRelation::new(SymMatrix::new(parse_matrix(&text)?)?)
                .with_context(|| format!("{} is not a class relation", path.display()))?
        }
        (None, Some(path)) => update_class_relation(&load_model(path)?.output_weights)?,
        _ => unreachable!("clap enforces exactly one of --omega / --model"),
    };
    let c = omega.order();
    let names = match &args.data {
        Some(manifest) => category_names(manifest)?,
        None => (0..c).map(|i| format!("cat_{i}")).collect(),
    };
    if names.len() != c {
        bail!(Error::Shape(format!(
            "relation has {c} categories but the labels name {}",
            names.len()
        )));
    }
    let groups = spectral_cluster(&omega, args.k, args.seed)?;
    let report = GroupReport::build(omega.matrix(), &groups, &names)?;
    for g in &report.groups {
        println!("group {}: {}", g.group, g.categories.join(" "));
    }
    if let Some(out) = &args.out {
        write_json(out, &report)?;
        let mut manifest = RunManifest::new("cluster", Some(args.seed), json!({ "k": args.k }))
            .output("groups", out);
        for (key, path) in [
            ("omega", &args.omega),
            ("model", &args.model),
            ("data", &args.data),
        ] {
            if let Some(p) = path {
                manifest = manifest.input(key, p);
            }
        }
        manifest.write(&sidecar_manifest(out))?;
    }
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<SynthSpec>(&text)
                .map_err(Error::from)
                .with_context(|| format!("invalid spec {}", path.display()))?
        }
        None => SynthSpec::default(),
    };
    args.apply(&mut spec);
    spec.validate()?;
    let out = generate(&spec)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let manifest_path = write_synth(&args.out, &spec, &out)?;
    let mut run = RunManifest::new("synth", Some(spec.seed), serde_json::to_value(&spec)?)
        .output("manifest", &manifest_path)
        .output("ground_truth", &args.out.join("ground_truth.json"));
    if let Some(path) = &args.spec {
        run = run.input("spec", path);
    }
    run.write(&args.out.join(RUN_MANIFEST))?;
    println!(
        "wrote {} samples, {} categories in {} groups, modalities {:?} to {}",
        spec.num_samples,
        spec.num_categories,
        spec.num_groups,
        spec.modality_dims,
        args.out.display()
    );
    Ok(())
}

/// Returns whether the check passed.
pub fn gradcheck(args: &GradcheckArgs) -> Result<bool> {
    let report = run_fixture(args.seed, args.step, args.tolerance)?;
    for case in &report.cases {
        println!(
            "lambda2={:e} lambda3={:e}: max relative error {:.3e}",
            case.lambda2, case.lambda3, case.max_relative_error
        );
    }
    println!(
        "max relative error: {:.3e} (tolerance {:e}, {} parameters)",
        report.max_relative_error(),
        report.tolerance,
        report.num_parameters
    );
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    Ok(report.passed())
}
