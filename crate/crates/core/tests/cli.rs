use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use binsep::harness::{read_records, ReportLine, Summary, TruthManifest};
use binsep::pipeline::ScenarioRecord;
use binsep::signal::StereoSignal;
use binsep::wav::{read_wav, write_wav, WavCodec};

fn binsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binsep"))
        .args(args)
        .env_remove("BINSEP_BRIR_ROOT")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn sim_config(dir: &Path, count: usize, seed: u64, brirs: &str) -> PathBuf {
    let path = dir.join("sim.toml");
    std::fs::write(
        &path,
        format!(
            "version = 1\nmaster_seed = {seed}\noutput_dir = \"sim\"\nbrirs = {brirs}\n\n\
             [[generators]]\ncount = {count}\nduration_s = 2.4\n"
        ),
    )
    .unwrap();
    path
}

const PURE_DELAY: &str = "{ kind = \"pure-delay\", samples_per_step = 1 }";
const SMALL_ROOM: &str = "{ kind = \"synthetic\", rt60_s = 0.2, filter_len = 512, seed = 3 }";

fn read_stereo(path: &Path) -> StereoSignal {
    read_wav(path, None).unwrap().into_stereo().unwrap()
}

fn tiny_weights(dir: &Path) -> PathBuf {
    let w = dir.join("w.bsrw");
    ok(&binsep(&["gen-weights", "--out", p(&w), "--seed", "4", "--preset", "tiny"]));
    w
}

#[test]
fn simulate_writes_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim_config(dir.path(), 2, 11, SMALL_ROOM);
    let listed = ok(&binsep(&["simulate", "--config", p(&cfg)]));
    assert_eq!(listed.lines().count(), 2);
    let root = dir.path().join("sim/scenarios");
    let mut scenario_dirs: Vec<_> = std::fs::read_dir(&root).unwrap().map(|e| e.unwrap().path()).collect();
    scenario_dirs.sort();
    assert_eq!(scenario_dirs.len(), 2);
    let wavs = |d: &Path| {
        let mut v: Vec<_> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    for d in &scenario_dirs {
        assert_eq!(wavs(d), ["mixture.wav", "ref1.wav", "ref2.wav", "truth.json"]);
    }

    let again = dir.path().join("again");
    ok(&binsep(&["simulate", "--config", p(&cfg), "--out", p(&again)]));
    for d in &scenario_dirs {
        let id = d.file_name().unwrap();
        for f in ["mixture.wav", "ref1.wav", "ref2.wav", "truth.json"] {
            let a = std::fs::read(d.join(f)).unwrap();
            let b = std::fs::read(again.join("scenarios").join(id).join(f)).unwrap();
            assert!(a == b, "{f} differs between runs");
        }
    }

    // the recorded trajectories rebuild the same mixture
    let m = TruthManifest::load(&scenario_dirs[1].join("truth.json")).unwrap();
    let rebuilt = m.resimulate().unwrap();
    let stored = read_stereo(&scenario_dirs[1].join("mixture.wav"));
    assert_eq!(rebuilt.mixture.len(), stored.len());
    for (a, b) in rebuilt.mixture.left().samples().iter().zip(stored.left().samples()) {
        assert_eq!(*a as f32 as f64, *b);
    }
    for (a, b) in rebuilt.mixture.right().samples().iter().zip(stored.right().samples()) {
        assert_eq!(*a as f32 as f64, *b);
    }
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "version = 1\nmaster_seed = 1\noutput_dir = \"o\"\nbrirz = 3\n").unwrap();
    let out = binsep(&["simulate", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4") && err.contains("brirz"), "{err}");

    let missing = binsep(&["simulate", "--config", p(&dir.path().join("nope.toml"))]);
    assert_eq!(missing.status.code(), Some(4));
    assert_eq!(binsep(&["simulate"]).status.code(), Some(2));
}

#[test]
fn brir_set_by_id_needs_the_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim_config(dir.path(), 1, 1, "{ kind = \"set\", id = \"room\" }");
    let out = binsep(&["simulate", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(10));

    let root = dir.path().join("brirs");
    ok(&binsep(&["gen-brirs", "--out", p(&root.join("room")), "--filter-len", "256"]));
    let out = Command::new(env!("CARGO_BIN_EXE_binsep"))
        .args(["simulate", "--config", p(&cfg)])
        .env("BINSEP_BRIR_ROOT", &root)
        .output()
        .unwrap();
    ok(&out);
    assert!(dir.path().join("sim/scenarios/s0000/mixture.wav").exists());
}

#[test]
fn separate_outputs_and_streaming_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim_config(dir.path(), 1, 2, PURE_DELAY);
    ok(&binsep(&["simulate", "--config", p(&cfg)]));
    let mix = dir.path().join("sim/scenarios/s0000/mixture.wav");
    let w = tiny_weights(dir.path());

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&binsep(&["separate", "--mixture", p(&mix), "--weights", p(&w), "--out", p(&a)]));
    ok(&binsep(&[
        "separate", "--mixture", p(&mix), "--weights", p(&w), "--out", p(&b), "--chunk-frames", "1",
    ]));
    for f in ["speaker1.wav", "speaker2.wav", "speaker1.doa.jsonl", "speaker2.doa.jsonl"] {
        let x = std::fs::read(a.join(f)).unwrap();
        assert!(x == std::fs::read(b.join(f)).unwrap(), "{f} depends on the push size");
    }
    assert!(a.join("timing.json").exists());
    let s1 = read_stereo(&a.join("speaker1.wav"));
    assert_eq!(s1.len(), read_stereo(&mix).len());
    let track = std::fs::read_to_string(a.join("speaker1.doa.jsonl")).unwrap();
    let recs = binsep::localization::read_track(&track).unwrap();
    // tiny net: 16-sample frames, 20-frame chunks of 20 ms
    assert_eq!(recs.len(), 38400 / 16 / 20);
    assert!((recs[1].start_s - 0.02).abs() < 1e-12);

    let voted = dir.path().join("q");
    ok(&binsep(&[
        "separate", "--mixture", p(&mix), "--weights", p(&w), "--out", p(&voted), "--q", "40",
    ]));
    let t = std::fs::read_to_string(voted.join("speaker2.doa.jsonl")).unwrap();
    assert_eq!(t.lines().count(), 38400 / 16 / 40);

    let full = std::fs::read(&w).unwrap();
    let cut = dir.path().join("cut.bsrw");
    std::fs::write(&cut, &full[..full.len() / 2]).unwrap();
    let out = binsep(&["separate", "--mixture", p(&mix), "--weights", p(&cut), "--out", p(&a)]);
    assert_eq!(out.status.code(), Some(6));

    let mono = dir.path().join("mono.wav");
    write_wav(&StereoSignal::zeros(10), &mono, WavCodec::Pcm16).unwrap();
    std::fs::write(&mono, b"RIFF\x04\x00\x00\x00WAVE").unwrap();
    let out = binsep(&["separate", "--mixture", p(&mono), "--weights", p(&w), "--out", p(&a)]);
    assert_eq!(out.status.code(), Some(5));

    let out = binsep(&[
        "separate", "--mixture", p(&mix), "--weights", p(&w), "--out", p(&a), "--profile-mode", "oracle",
    ]);
    assert_eq!(out.status.code(), Some(10));
}

fn eval(manifest: &Path, outputs: &[&Path]) -> Output {
    let mut args = vec!["evaluate", "--manifest", p(manifest)];
    for o in outputs {
        args.extend(["--output", p(o)]);
    }
    binsep(&args)
}

/// Plain-loop SNR with the same floor and clamp.
fn checker_snr(reference: &[f64], estimate: &[f64]) -> f64 {
    let mut sig = 0.0;
    let mut err = 0.0;
    for (r, e) in reference.iter().zip(estimate) {
        sig += r * r;
        err += (r - e) * (r - e);
    }
    if sig == 0.0 {
        return if err == 0.0 { 120.0 } else { -120.0 };
    }
    (10.0 * (sig / (err + 1e-12 * sig)).log10()).clamp(-120.0, 120.0)
}

#[test]
fn evaluate_identities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sim_config(dir.path(), 1, 9, PURE_DELAY);
    ok(&binsep(&["simulate", "--config", p(&cfg)]));
    let sc = dir.path().join("sim/scenarios/s0000");
    let manifest = sc.join("truth.json");
    let (r1, r2) = (sc.join("ref1.wav"), sc.join("ref2.wav"));

    let rec: ScenarioRecord = serde_json::from_str(&ok(&eval(&manifest, &[&r1, &r2]))).unwrap();
    assert_eq!(rec.swaps, 0);
    assert_eq!(rec.pairing, vec![0, 1]);
    for s in &rec.speakers {
        assert_eq!(s.snr_db, 240.0);
        let mae = s.doa_mae_deg.expect("scored windows");
        assert!(mae <= 5.0, "DOA MAE {mae}");
    }

    // reversed output order is a pairing, not a swap
    let rec: ScenarioRecord = serde_json::from_str(&ok(&eval(&manifest, &[&r2, &r1]))).unwrap();
    assert_eq!((rec.swaps, rec.pairing.clone()), (0, vec![1, 0]));

    // one mid-stream flip
    let a = read_stereo(&r1);
    let b = read_stereo(&r2);
    let half = a.len() / 2 + 777;
    let splice = |x: &StereoSignal, y: &StereoSignal| {
        let cat = |u: &[f64], v: &[f64]| u[..half].iter().chain(&v[half..]).copied().collect::<Vec<f64>>();
        StereoSignal::from_channels(
            cat(x.left().samples(), y.left().samples()),
            cat(x.right().samples(), y.right().samples()),
        )
        .unwrap()
    };
    let (o1, o2) = (dir.path().join("o1.wav"), dir.path().join("o2.wav"));
    write_wav(&splice(&a, &b), &o1, WavCodec::Float32).unwrap();
    write_wav(&splice(&b, &a), &o2, WavCodec::Float32).unwrap();
    let rec: ScenarioRecord = serde_json::from_str(&ok(&eval(&manifest, &[&o1, &o2]))).unwrap();
    assert_eq!(rec.swaps, 1);
    assert_eq!(rec.segment_pattern.len(), 10);

    // a standalone recomputation of the SNR fields
    let noisy = dir.path().join("noisy.wav");
    let scaled = StereoSignal::from_channels(
        a.left().samples().iter().enumerate().map(|(i, v)| 0.7 * v + 1e-3 * ((i % 7) as f64 - 3.0)).collect(),
        a.right().samples().iter().map(|v| 0.9 * v).collect(),
    )
    .unwrap();
    write_wav(&scaled, &noisy, WavCodec::Float32).unwrap();
    let report = dir.path().join("rec.jsonl");
    let out = binsep(&[
        "evaluate", "--manifest", p(&manifest), "--output", p(&noisy), "--output", p(&r2), "--report", p(&report),
    ]);
    let rec: ScenarioRecord = serde_json::from_str(&ok(&out)).unwrap();
    let stored = read_stereo(&noisy);
    let want = checker_snr(a.left().samples(), stored.left().samples())
        + checker_snr(a.right().samples(), stored.right().samples());
    assert!((rec.speakers[0].snr_db - want).abs() < 1e-9, "{} vs {want}", rec.speakers[0].snr_db);
    assert_eq!(rec.speakers[1].snr_db, 240.0);
    let mix = read_stereo(&sc.join("mixture.wav"));
    let want_mix = checker_snr(b.left().samples(), mix.left().samples())
        + checker_snr(b.right().samples(), mix.right().samples());
    assert!((rec.speakers[1].mixture_snr_db - want_mix).abs() < 1e-9);
    match &read_records(&report).unwrap()[..] {
        [ReportLine::Scenario(r)] => assert_eq!(r, &rec),
        other => panic!("unexpected report {other:?}"),
    }

    let short = dir.path().join("short.wav");
    write_wav(&a.slice(0, 1000), &short, WavCodec::Float32).unwrap();
    let out = eval(&manifest, &[&short, &r2]);
    assert_eq!(out.status.code(), Some(9));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples"));
}

fn experiment_spec(dir: &Path, count: usize, extra: &str) -> PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(
        &path,
        format!(
            "version = 1\nname = \"reduced\"\nmaster_seed = 77\noutput_dir = \"run\"\njobs = 2\n\
             brirs = {SMALL_ROOM}\n{extra}\n\
             [weights]\nseed = 5\npreset = \"tiny\"\n\n\
             [[generators]]\ncount = {count}\nduration_s = 2.4\n"
        ),
    )
    .unwrap();
    path
}

#[test]
fn run_experiment_summary_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let spec = experiment_spec(dir.path(), 3, "");
    let stdout = ok(&binsep(&["run-experiment", "--spec", p(&spec)]));
    assert!(stdout.contains("# of swaps") && stdout.contains("real-time factor"), "{stdout}");
    let run = dir.path().join("run");
    let lines = read_records(&run.join("records.jsonl")).unwrap();
    let records: Vec<ScenarioRecord> = lines
        .into_iter()
        .map(|l| match l {
            ReportLine::Scenario(r) => r,
            ReportLine::Error(e) => panic!("{e:?}"),
        })
        .collect();
    let ids: Vec<&str> = records.iter().map(|r| r.scenario.as_str()).collect();
    assert_eq!(ids, ["s0000", "s0001", "s0002"]);

    let summary: Summary = serde_json::from_str(&std::fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.scenarios, 3);
    let swaps = records.iter().map(|r| r.swaps).sum::<usize>() as f64 / 3.0;
    assert!((summary.mean_swaps - swaps).abs() < 1e-12);
    let snrs: Vec<f64> = records.iter().flat_map(|r| r.speakers.iter().map(|s| s.snr_db)).collect();
    assert!((summary.mean_snr_db - snrs.iter().sum::<f64>() / snrs.len() as f64).abs() < 1e-9);
    let doa: Vec<f64> = records.iter().flat_map(|r| r.speakers.iter().filter_map(|s| s.doa_mae_deg)).collect();
    if !doa.is_empty() {
        let m = doa.iter().sum::<f64>() / doa.len() as f64;
        assert!((summary.mean_doa_mae_deg.unwrap() - m).abs() < 1e-9);
    }

    // the experiment's records equal evaluate run on its files
    let sc = run.join("scenarios/s0001");
    let out = binsep(&["evaluate", "--manifest", p(&sc.join("truth.json")), "--outputs", p(&sc), "--profile-mode", "centroid"]);
    let rec: ScenarioRecord = serde_json::from_str(&ok(&out)).unwrap();
    assert_eq!(rec, records[1]);

    let again = dir.path().join("again");
    ok(&binsep(&["run-experiment", "--spec", p(&spec), "--out", p(&again), "--jobs", "1"]));
    for f in ["records.jsonl", "summary.json", "summary.md"] {
        assert!(std::fs::read(run.join(f)).unwrap() == std::fs::read(again.join(f)).unwrap(), "{f}");
    }
    for f in ["mixture.wav", "speaker1.wav", "speaker2.doa.jsonl"] {
        let a = std::fs::read(run.join("scenarios/s0002").join(f)).unwrap();
        assert!(a == std::fs::read(again.join("scenarios/s0002").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn run_experiment_oracle_mode() {
    let dir = tempfile::tempdir().unwrap();
    let spec = experiment_spec(dir.path(), 1, "");
    let out = binsep(&["run-experiment", "--spec", p(&spec), "--profile-mode", "oracle"]);
    ok(&out);
    let sc = dir.path().join("run/scenarios/s0000");
    assert!(sc.join("oracle.bsrw").exists());
    let lines = read_records(&dir.path().join("run/records.jsonl")).unwrap();
    assert!(matches!(&lines[..], [ReportLine::Scenario(r)] if r.profile_mode == Some(binsep::tracker::ProfileMode::Oracle)));
}

#[test]
fn run_experiment_fails_fast_with_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(
        &path,
        "version = 1\nmaster_seed = 1\noutput_dir = \"run\"\n\
         [weights]\nseed = 1\npreset = \"tiny\"\n\n\
         [[generators]]\ncount = 1\nduration_s = 0.5\nbrirs = { kind = \"pure-delay\", samples_per_step = 1 }\n\n\
         [[generators]]\ncount = 2\nduration_s = 0.5\nbrirs = { kind = \"set\", id = \"absent\" }\n",
    )
    .unwrap();
    let out = binsep(&["run-experiment", "--spec", p(&path)]);
    assert_eq!(out.status.code(), Some(10));
    let lines = read_records(&dir.path().join("run/records.jsonl")).unwrap();
    assert_eq!(lines.len(), 2);
    assert!(matches!(&lines[0], ReportLine::Scenario(r) if r.scenario == "s0000"));
    assert!(matches!(&lines[1], ReportLine::Error(e) if e.scenario == "s0001" && e.exit_code == 10));
}

#[test]
fn gen_weights_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.bsrw"), dir.path().join("b.bsrw"));
    ok(&binsep(&["gen-weights", "--out", p(&a), "--seed", "3"]));
    ok(&binsep(&["gen-weights", "--out", p(&b), "--seed", "3"]));
    assert!(std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap());
    let desc = dir.path().join("d.toml");
    std::fs::write(&desc, "version = 1\n").unwrap();
    let out = binsep(&["gen-weights", "--out", p(&a), "--descriptor", p(&desc)]);
    assert_eq!(out.status.code(), Some(3));
}
