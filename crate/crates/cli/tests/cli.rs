use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
process = "Local-Random"
criteria = ["ES", "MA(3)"]
seed = 5
budget = 200
n_batch = 20
theta = 0.1
n_sample_override = 200

[synthetic]
n = 5
scores = [2.0, 1.5, 1.0, 0.5, 0.0]
accuracy = 0.85
"#;

fn crowdstop(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crowdstop"))
        .args(args)
        .current_dir(dir)
        .env_remove("CROWDSTOP_OUT")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn setup(config: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.toml"), config).unwrap();
    dir
}

#[test]
fn missing_config_exits_with_status_two_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = crowdstop(&["run", "--config", "nowhere.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.toml"));
}

#[test]
fn run_writes_ten_repetitions_and_an_average_per_criterion() {
    let dir = setup(SMALL);
    let stdout = ok(crowdstop(
        &[
            "run",
            "--config",
            "cfg.toml",
            "--criterion",
            "ES",
            "--out",
            "o",
        ],
        dir.path(),
    ));
    assert!(stdout.contains("Local-Random"), "{stdout}");
    let results = fs::read_to_string(dir.path().join("o/results.csv")).unwrap();
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(
        lines[0],
        "process,criterion,theta,rep,p_sc,p_optimal,delta_sc,used_budget,actual_error"
    );
    assert_eq!(lines.len(), 1 + 10 + 1);
    assert!(lines[1..]
        .iter()
        .all(|l| l.starts_with("Local-Random,ES,0.1,")));
    assert!(lines[11].contains(",avg,"));
    let curves = fs::read_to_string(dir.path().join("o/curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 10 * 10);
}

#[test]
fn same_seed_gives_identical_files_and_another_seed_differs() {
    let dir = setup(SMALL);
    let read = |sub: &str| {
        ["results.csv", "curves.csv"].map(|f| fs::read(dir.path().join(sub).join(f)).unwrap())
    };
    for sub in ["a", "b"] {
        ok(crowdstop(
            &["run", "--config", "cfg.toml", "--seed", "7", "--out", sub],
            dir.path(),
        ));
    }
    ok(crowdstop(
        &["run", "--config", "cfg.toml", "--seed", "8", "--out", "c"],
        dir.path(),
    ));
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a")[1], read("c")[1]);
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = setup(SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_crowdstop"))
        .args(["run", "--config", "cfg.toml", "--criterion", "MA(3)"])
        .current_dir(dir.path())
        .env("CROWDSTOP_OUT", "from-env")
        .output()
        .unwrap();
    ok(out);
    assert!(dir.path().join("from-env/results.csv").exists());
}

#[test]
fn sweep_emits_one_block_per_value_and_records_skips() {
    let dir = setup(SMALL);
    let stdout = ok(crowdstop(
        &[
            "sweep",
            "--config",
            "cfg.toml",
            "--criterion",
            "MA(3)",
            "--axis",
            "n_batch",
            "--values",
            "10,20,40,0",
            "--out",
            "s",
        ],
        dir.path(),
    ));
    assert!(stdout.contains("3 of 4"), "{stdout}");
    let sweep = fs::read_to_string(dir.path().join("s/sweep.csv")).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert!(lines[0].starts_with("axis,value,process,"));
    assert!(lines[0].ends_with(",note"));
    for v in ["10", "20", "40"] {
        let prefix = format!("n_batch,{v},");
        assert_eq!(
            lines.iter().filter(|l| l.starts_with(&prefix)).count(),
            11,
            "value {v}"
        );
    }
    let skipped: Vec<&&str> = lines
        .iter()
        .filter(|l| l.starts_with("n_batch,0,"))
        .collect();
    assert_eq!(skipped.len(), 1);
    assert!(skipped[0].contains("skipped:"));
    let width = lines[0].split(',').count();
    assert!(lines.iter().all(|l| l.split(',').count() == width));
}

#[test]
fn oracle_reads_run_curves() {
    let dir = setup(SMALL);
    ok(crowdstop(
        &[
            "run",
            "--config",
            "cfg.toml",
            "--criterion",
            "MA(3)",
            "--out",
            "o",
        ],
        dir.path(),
    ));
    let stdout = ok(crowdstop(
        &[
            "oracle",
            "--curve",
            "o/curves.csv",
            "--theta",
            "0.1",
            "--out",
            "o",
        ],
        dir.path(),
    ));
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "process,rep,p_optimal,total_batches,savings");
    assert_eq!(lines.len(), 11);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        let p: usize = f[2].parse().unwrap();
        assert_eq!(f[3], "10");
        assert!((1..=10).contains(&p));
        let s: f64 = f[4].parse().unwrap();
        assert!((s - (1.0 - p as f64 / 10.0)).abs() < 1e-9);
    }
    assert!(dir.path().join("o/oracle.csv").exists());

    let curves = fs::read_to_string(dir.path().join("o/curves.csv")).unwrap();
    // drop checkpoint 1 of the first run
    let truncated: String = curves
        .lines()
        .enumerate()
        .filter(|&(i, _)| i != 1)
        .map(|(_, l)| format!("{l}\n"))
        .collect();
    fs::write(dir.path().join("cut.csv"), truncated).unwrap();
    let out = crowdstop(
        &["oracle", "--curve", "cut.csv", "--theta", "0.1"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("incomplete curve"));
}

fn write_objects(dir: &Path) {
    fs::write(dir.join("objects.csv"), "object,rank\na,1\nb,2\nc,3\nd,4\n").unwrap();
}

#[test]
fn convert_then_check_stop_on_a_unanimous_log() {
    let dir = setup(
        "process = \"Copeland-Random\"\nbudget = 120\nn_batch = 12\ntheta = 0.1\nn_sample_override = 300\nreliability = \"constant:1.0\"\n",
    );
    write_objects(dir.path());
    let mut raw = String::from("judge,better,worse\n");
    let names = ["a", "b", "c", "d"];
    for r in 0..4 {
        for i in 0..4 {
            for j in i + 1..4 {
                raw.push_str(&format!("w{r},{},{}\n", names[i], names[j]));
            }
        }
    }
    fs::write(dir.path().join("raw.csv"), raw).unwrap();
    let stdout = ok(crowdstop(
        &[
            "convert",
            "--input",
            "raw.csv",
            "--output",
            "log.csv",
            "--worker-col",
            "judge",
            "--winner-col",
            "better",
            "--loser-col",
            "worse",
        ],
        dir.path(),
    ));
    assert!(stdout.contains("converted 24 answers"), "{stdout}");
    let log = fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert_eq!(log.lines().next(), Some("worker_id,left,right,winner"));
    assert_eq!(log.lines().nth(1), Some("w0,a,b,a"));

    let stdout = ok(crowdstop(
        &[
            "check-stop",
            "--config",
            "cfg.toml",
            "--log",
            "log.csv",
            "--objects",
            "objects.csv",
            "--out",
            "cs",
        ],
        dir.path(),
    ));
    assert!(stdout.contains("decision = stop"), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("cs/check_stop.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    assert_eq!(row[1], "8");
}

#[test]
fn check_stop_rejects_a_log_with_unknown_objects() {
    let dir = setup("budget = 40\nn_batch = 2\n");
    write_objects(dir.path());
    fs::write(
        dir.path().join("log.csv"),
        "worker_id,left,right,winner\nw,a,z,a\nw,a,b,a\n",
    )
    .unwrap();
    let out = crowdstop(
        &[
            "check-stop",
            "--config",
            "cfg.toml",
            "--log",
            "log.csv",
            "--objects",
            "objects.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("z"));
}
