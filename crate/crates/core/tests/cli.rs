mod common;

use std::path::Path;
use std::process::{Command, Output};

use inmaca::fixtures::{SAMPLE_FASTA, TABLE1_TSV};
use inmaca::report::{
    parse_gene_table, parse_promoter_table, GENE_TABLE_HEADER, PROMOTER_TABLE_HEADER,
};
use inmaca::trainer::{train, AffinityMode, TrainerConfig};
use inmaca::FuzzyLevels;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn inmaca(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inmaca"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn workdir() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("table1.tsv"), TABLE1_TSV).unwrap();
    std::fs::write(dir.path().join("sample.fasta"), SAMPLE_FASTA).unwrap();
    dir
}

fn write_model(dir: &Path, name: &str, split: &common::Split) {
    let mut config = TrainerConfig::new(FuzzyLevels::default(), split.train[0].features.len());
    config.affinity = AffinityMode::LeaveOneOut;
    config.generations = 40;
    config.seed = 5;
    let (model, _) = train(&split.train, &config).unwrap();
    std::fs::write(dir.join(name), model.serialize()).unwrap();
}

#[test]
fn train_writes_model_and_curve() {
    let dir = workdir();
    let out = stdout(&inmaca(
        &[
            "train",
            "--data",
            "table1.tsv",
            "--pop",
            "20",
            "--gens",
            "30",
            "--seed",
            "3",
            "--out",
            "m.txt",
        ],
        dir.path(),
    ));
    assert!(out.starts_with("final_fitness\t"));
    assert!(out.contains("metric\taccuracy\n"));
    assert!(out.contains("evaluations\t1580\n"));
    let curve: Vec<&str> = out
        .lines()
        .skip_while(|l| *l != "generation\tbest_fitness")
        .skip(1)
        .collect();
    assert_eq!(curve.len(), 31);
    let model = std::fs::read_to_string(dir.path().join("m.txt")).unwrap();
    assert!(model.starts_with("AIS-INMACA-MODEL v1\nn=6\nsize=3\n"));

    let basins = stdout(&inmaca(&["basins", "--model", "m.txt"], dir.path()));
    assert!(basins.starts_with("attractor\tvalues\tbasin_size\tlabel\n"));
    assert!(basins.ends_with("total\t216\n"));
}

#[test]
fn train_with_cc_metric_and_loo() {
    let dir = workdir();
    let out = stdout(&inmaca(
        &[
            "train",
            "--data",
            "table1.tsv",
            "--pop",
            "10",
            "--gens",
            "5",
            "--metric",
            "cc",
            "--affinity",
            "loo",
            "--out",
            "m.txt",
        ],
        dir.path(),
    ));
    assert!(out.contains("metric\tcc\n"));
}

#[test]
fn basins_from_rule_spec() {
    let dir = workdir();
    let zero = stdout(&inmaca(
        &["basins", "--rules", "ZERO*3", "--n", "6"],
        dir.path(),
    ));
    assert_eq!(
        zero,
        "attractor\tvalues\tbasin_size\tlabel\n0,0,0\t0,0,0\t216\t-\ntotal\t216\n"
    );
    let ident = stdout(&inmaca(
        &["basins", "--rules", "IDENTITY*3", "--n", "2"],
        dir.path(),
    ));
    assert_eq!(ident.lines().count(), 10);
    assert!(ident.lines().skip(1).take(8).all(|l| l.ends_with("\t1\t-")));
    assert!(ident.ends_with("total\t8\n"));
    assert_eq!(
        inmaca(&["basins", "--rules", "ZERO*3", "--size", "4"], dir.path())
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        inmaca(&["basins", "--rules", "XOR"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn evaluate_reports_metrics() {
    let dir = workdir();
    let p = dir.path();
    std::fs::write(p.join("truth.txt"), "r1\t1\t13\n").unwrap();
    std::fs::write(p.join("pred.txt"), "r1\t5\t14\n").unwrap();
    std::fs::write(p.join("empty.txt"), "").unwrap();

    let same = stdout(&inmaca(
        &[
            "evaluate",
            "--pred",
            "truth.txt",
            "--truth",
            "truth.txt",
            "--len",
            "22",
        ],
        p,
    ));
    assert!(same.contains("cc\t1.000000\n"));
    assert!(same.contains("sn\t1.000000\n"));

    let mixed = stdout(&inmaca(
        &[
            "evaluate",
            "--pred",
            "pred.txt",
            "--truth",
            "truth.txt",
            "--len",
            "22",
        ],
        p,
    ));
    for line in [
        "tp\t9",
        "fp\t1",
        "tn\t8",
        "fn\t4",
        "ap\t13",
        "pp\t10",
        "cc\t0.573886",
        "accuracy\t0.772727",
    ] {
        assert!(
            mixed.contains(&format!("{line}\n")),
            "{line} missing from\n{mixed}"
        );
    }

    let none = stdout(&inmaca(
        &[
            "evaluate",
            "--pred",
            "empty.txt",
            "--truth",
            "empty.txt",
            "--len",
            "10",
        ],
        p,
    ));
    assert!(none.contains("tn\t10\n"));
    assert!(none.contains("cc\tundefined\n"));
    assert!(none.contains("sn\tundefined\n"));

    let bad = inmaca(
        &[
            "evaluate",
            "--pred",
            "pred.txt",
            "--truth",
            "truth.txt",
            "--len",
            "10",
        ],
        p,
    );
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn features_table() {
    let dir = workdir();
    let out = stdout(&inmaca(
        &["features", "--fasta", "sample.fasta", "--task", "promoter"],
        dir.path(),
    ));
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("id\tstart\tend\tgc\tcpg_oe\ttata\tinr"));
    let rows: Vec<&str> = lines.collect();
    assert!(!rows.is_empty());
    for row in rows {
        let fields: Vec<&str> = row.split('\t').collect();
        assert_eq!(fields.len(), 7);
        let (start, end): (usize, usize) = (fields[1].parse().unwrap(), fields[2].parse().unwrap());
        assert_eq!(end - start, 50);
        assert!(fields[3..]
            .iter()
            .all(|f| (0.0..=1.0).contains(&f.parse::<f64>().unwrap())));
    }
    let coding = stdout(&inmaca(
        &[
            "features",
            "--fasta",
            "sample.fasta",
            "--task",
            "coding",
            "--window",
            "30",
        ],
        dir.path(),
    ));
    assert_eq!(coding.lines().next().unwrap().split('\t').count(), 12);
}

#[test]
fn predict_coding_regions() {
    let dir = workdir();
    let p = dir.path();
    write_model(p, "coding.txt", &common::coding_set(300, 120, 8));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let genome = format!(
        "{}{}{}",
        common::uniform_seq(300, &mut rng),
        common::coding_seq(360, 0.5, &mut rng),
        common::uniform_seq(300, &mut rng)
    );
    std::fs::write(p.join("g.fasta"), format!(">g1\n{genome}\n")).unwrap();

    let table = stdout(&inmaca(
        &[
            "predict",
            "--model",
            "coding.txt",
            "--fasta",
            "g.fasta",
            "--task",
            "coding",
        ],
        p,
    ));
    assert!(table.starts_with(&format!("{GENE_TABLE_HEADER}\n")));
    let rows = parse_gene_table(&table).unwrap();
    assert!(!rows.is_empty(), "no coding region found:\n{table}");
    // the planted block spans 301..=660
    assert!(rows.iter().any(|r| r.left <= 480 && r.right >= 480));
    assert!(rows.iter().all(|r| r.left > 200), "{table}");

    let raw = stdout(&inmaca(
        &[
            "predict",
            "--model",
            "coding.txt",
            "--fasta",
            "g.fasta",
            "--task",
            "coding",
            "--format",
            "raw",
        ],
        p,
    ));
    let windows = (960 - 120) / 10 + 1;
    assert_eq!(raw.lines().count(), windows);
    assert!(raw
        .lines()
        .all(|l| l.starts_with("g1\t") && l.split('\t').count() == 5));

    let both = stdout(&inmaca(
        &[
            "predict",
            "--model",
            "coding.txt",
            "--fasta",
            "g.fasta",
            "--task",
            "coding",
            "--format",
            "raw",
            "--both-strands",
        ],
        p,
    ));
    assert_eq!(both.lines().count(), 2 * windows);
    assert!(both.lines().any(|l| l.ends_with("\t-")));
}

#[test]
fn predict_promoters() {
    let dir = workdir();
    let p = dir.path();
    write_model(p, "prom.txt", &common::promoter_set(300, 50, 8));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let seq = format!(
        "{}{}{}",
        common::uniform_seq(200, &mut rng),
        common::promoter_seq(50, &mut rng),
        common::uniform_seq(200, &mut rng)
    );
    std::fs::write(p.join("p.fasta"), format!(">p1\n{seq}\n")).unwrap();
    let table = stdout(&inmaca(
        &[
            "predict",
            "--model",
            "prom.txt",
            "--fasta",
            "p.fasta",
            "--task",
            "promoter",
            "--positive",
            "P",
        ],
        p,
    ));
    assert!(table.starts_with(&format!("{PROMOTER_TABLE_HEADER}\n")));
    let rows = parse_promoter_table(&table).unwrap();
    assert!(
        rows.iter().any(|r| r.start >= 171 && r.start <= 231),
        "{table}"
    );
    for r in &rows {
        assert_eq!(r.end - r.start, 50);
        assert_eq!(r.sequence, seq[r.start - 1..r.end - 1]);
    }
}

#[test]
fn exit_codes() {
    let dir = workdir();
    let p = dir.path();
    assert_eq!(inmaca(&[], p).status.code(), Some(1));
    assert_eq!(inmaca(&["frobnicate"], p).status.code(), Some(1));
    assert_eq!(
        inmaca(&["train", "--data", "missing.tsv", "--out", "m.txt"], p)
            .status
            .code(),
        Some(2)
    );
    std::fs::write(p.join("bad.fasta"), ">x\nACGU\n").unwrap();
    assert_eq!(
        inmaca(&["features", "--fasta", "bad.fasta", "--task", "coding"], p)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        inmaca(
            &[
                "train",
                "--data",
                "table1.tsv",
                "--size",
                "4",
                "--out",
                "m.txt"
            ],
            p
        )
        .status
        .code(),
        Some(3)
    );
    assert_eq!(
        inmaca(
            &[
                "train",
                "--data",
                "table1.tsv",
                "--n",
                "1",
                "--out",
                "m.txt"
            ],
            p
        )
        .status
        .code(),
        Some(1)
    );
    stdout(&inmaca(
        &[
            "train",
            "--data",
            "table1.tsv",
            "--pop",
            "4",
            "--gens",
            "2",
            "--out",
            "m.txt",
        ],
        p,
    ));
    let mismatch = inmaca(
        &[
            "predict",
            "--model",
            "m.txt",
            "--fasta",
            "sample.fasta",
            "--task",
            "coding",
        ],
        p,
    );
    assert_eq!(mismatch.status.code(), Some(3));
    std::fs::write(p.join("v2.txt"), "AIS-INMACA-MODEL v2\n").unwrap();
    assert_ne!(
        inmaca(&["basins", "--model", "v2.txt"], p).status.code(),
        Some(0)
    );
}
