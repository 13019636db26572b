use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pnu_auc::analysis::{auc, model_auc};
use pnu_auc::data::{self, generate_synthetic, ClassPrior, Loaded, SampleMatrix, SyntheticSpec, TrainingData};
use pnu_auc::solver::TrainedModel;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pnu-auc"));
    c.env_remove("PNU_AUC_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A fresh directory holding a generated labeled dataset.
fn dataset(prior: f64, separation: f64) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("train.csv");
    let o = run(&[
        "--seed", "3", "datagen", "--prior", &prior.to_string(), "--separation", &separation.to_string(),
        "--n-p", "15", "--n-n", "25", "--n-u", "60", "--out", p(&file),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    (dir, file)
}

fn load(path: &Path) -> TrainingData {
    match data::load_csv(path, Some(0)).unwrap() {
        Loaded::Labeled(d) => d,
        Loaded::Unlabeled(_) => panic!("expected labels"),
    }
}

#[test]
fn missing_prior_in_pu_mode_names_the_flag() {
    let (dir, file) = dataset(0.3, 2.0);
    let model = dir.path().join("m.txt");
    let o = run(&["train", "--data", p(&file), "--mode", "pu", "--model", p(&model)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--prior"), "{}", stderr(&o));
    assert!(!model.exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["train", "--mode", "sideways"])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
    let (dir, file) = dataset(0.3, 2.0);
    let model = dir.path().join("m.txt");
    let o = run(&["train", "--data", p(&file), "--mode", "pn", "--eta", "0.5", "--model", p(&model)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--eta"));
}

#[test]
fn unregularised_kernel_system_is_a_numeric_failure() {
    let (dir, file) = dataset(0.3, 2.0);
    let model = dir.path().join("m.txt");
    let o = run(&["train", "--data", p(&file), "--mode", "pn", "--lambda", "0", "--model", p(&model)]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn pnu_at_eta_zero_writes_the_pn_model() {
    let (dir, file) = dataset(0.3, 2.0);
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    let o = run(&["train", "--data", p(&file), "--mode", "pn", "--model", p(&a)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&["train", "--data", p(&file), "--mode", "pnu", "--eta", "0", "--prior", "0.3", "--model", p(&b)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn single_candidate_cv_equals_pinned_training() {
    let (dir, file) = dataset(0.3, 2.0);
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    let report = dir.path().join("cv.csv");
    let common = ["train", "--data", p(&file), "--mode", "pnu", "--prior", "0.3", "--eta", "-0.4", "--lambda", "0.05", "--sigma-factor", "0.5"];
    let o = run(&[&common[..], &["--model", p(&a)]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(&[&common[..], &["--cv", "--folds", "3", "--cv-report", p(&report), "--model", p(&b)]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let table = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "sigma_factor,lambda,eta,fold_1,fold_2,fold_3,mean");
    assert_eq!(lines.len(), 2);
}

#[test]
fn train_summary_row_and_verify() {
    let (dir, file) = dataset(0.3, 2.0);
    let model = dir.path().join("m.txt");
    let o = run(&[
        "train", "--data", p(&file), "--mode", "pnpu", "--gamma", "0.3", "--prior", "0.3", "--verify", "--model", p(&model),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "mode,family,parameter,sigma_factor,bandwidth,lambda,b,training_risk");
    assert!(lines[1].starts_with("pnpu,pnpu,0.3,1,"), "{}", lines[1]);
    let loaded = TrainedModel::load(&model).unwrap();
    assert_eq!(loaded.prior(), Some(ClassPrior::new(0.3).unwrap()));
}

#[test]
fn eval_reproduces_library_auc() {
    let (dir, file) = dataset(0.3, 2.0);
    let model = dir.path().join("m.txt");
    let o = run(&["train", "--data", p(&file), "--mode", "pn", "--model", p(&model)]);
    assert_eq!(code(&o), 0);
    let o = run(&["eval", "--model", p(&model), "--data", p(&file)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = TrainedModel::load(&model).unwrap();
    let d = load(&file);
    let expected = model_auc(&m, &d).unwrap();
    let direct = auc(&m.score(d.positives()).unwrap(), &m.score(d.negatives()).unwrap()).unwrap();
    assert_eq!(expected, direct);
    assert_eq!(stdout(&o), format!("n_p,n_n,auc\n15,25,{expected:.6}\n"));
}

#[test]
fn separable_data_evaluates_to_one() {
    let (dir, file) = dataset(0.5, 30.0);
    let model = dir.path().join("m.txt");
    assert_eq!(code(&run(&["train", "--data", p(&file), "--mode", "pn", "--model", p(&model)])), 0);
    let o = run(&["eval", "--model", p(&model), "--data", p(&file)]);
    assert!(stdout(&o).ends_with(",1.000000\n"), "{}", stdout(&o));
}

#[test]
fn eval_rejects_missing_negatives_and_wrong_dimension() {
    let (dir, file) = dataset(0.3, 2.0);
    let model = dir.path().join("m.txt");
    assert_eq!(code(&run(&["train", "--data", p(&file), "--mode", "pn", "--model", p(&model)])), 0);
    let only_pos = dir.path().join("pos.csv");
    fs::write(&only_pos, "1,0.5,0.5\n1,1.0,0.0\n0,0.1,0.2\n").unwrap();
    assert_eq!(code(&run(&["eval", "--model", p(&model), "--data", p(&only_pos)])), 3);
    let wide = dir.path().join("wide.csv");
    fs::write(&wide, "1,0.5,0.5,1\n-1,1.0,0.0,2\n").unwrap();
    assert_eq!(code(&run(&["eval", "--model", p(&model), "--data", p(&wide)])), 3);
    let missing = dir.path().join("absent.csv");
    assert_eq!(code(&run(&["eval", "--model", p(&model), "--data", p(&missing)])), 3);
}

#[test]
fn variance_ratio_smoke_run() {
    let o = run(&["experiment", "variance-ratio", "--trials", "2", "--eta-step", "0.25"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "eta,ratio,stderr,var_pn,var_pnu");
    assert_eq!(lines.len(), 1 + 9);
    assert!(lines.iter().any(|l| l.starts_with("0,1,0,")), "{out}");
}

#[test]
fn experiments_are_seed_deterministic() {
    let args = ["experiment", "sensitivity", "--trials", "3", "--rhos=-0.05,0,0.05", "--eta", "0.5"];
    let a = run(&[&["--seed", "5"], &args[..]].concat());
    let b = bin().env("PNU_AUC_SEED", "5").args(args).output().unwrap();
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[&["--seed", "6"], &args[..]].concat());
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sensitivity_rejects_non_positive_perturbed_prior() {
    let o = run(&["experiment", "sensitivity", "--prior", "0.05", "--rhos=-0.09", "--trials", "2"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn pu_vs_biased_writes_one_row_per_prior() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = run(&["--output", p(&out), "experiment", "pu-vs-biased", "--trials", "2", "--n-p", "20", "--n-u", "80"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let table = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "prior,auc_pu,stderr_pu,auc_biased,stderr_biased,gap,stderr_gap");
    assert!(lines[1].starts_with("0.1,") && lines[2].starts_with("0.2,"));
}

#[test]
fn datagen_round_trips_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec::separated(3, 2.0, ClassPrior::new(0.25).unwrap(), 9);
    let expected = generate_synthetic(&spec, 7, 11, 13).unwrap();
    for (format, name) in [("csv", "d.csv"), ("libsvm", "d.libsvm")] {
        let file = dir.path().join(name);
        let o = run(&[
            "--seed", "9", "datagen", "--dim", "3", "--prior", "0.25", "--n-p", "7", "--n-n", "11", "--n-u", "13",
            "--format", format, "--out", p(&file),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let got = if format == "csv" { load(&file) } else { data::load_libsvm(&file).unwrap() };
        assert_eq!((got.n_p(), got.n_n(), got.n_u()), (7, 11, 13));
        assert_eq!(got.with_prior(spec.prior), expected);
    }
    let again = dir.path().join("again.csv");
    run(&["--seed", "9", "datagen", "--dim", "3", "--prior", "0.25", "--n-p", "7", "--n-n", "11", "--n-u", "13", "--out", p(&again)]);
    assert_eq!(fs::read(&again).unwrap(), fs::read(dir.path().join("d.csv")).unwrap());
}

#[test]
fn datagen_io_failure_exits_three() {
    let o = run(&["datagen", "--prior", "0.3", "--n-p", "2", "--n-n", "2", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn libsvm_output_omits_zero_entries() {
    let pos = SampleMatrix::from_rows(&[[0.0, 1.5, 0.0]]).unwrap();
    let neg = SampleMatrix::from_rows(&[[2.0, 0.0, -1.0]]).unwrap();
    let d = TrainingData::new(pos, neg, SampleMatrix::empty(3), None).unwrap();
    let mut out = Vec::new();
    data::write_libsvm(&d, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "+1 2:1.5\n-1 1:2 3:-1\n");
}
