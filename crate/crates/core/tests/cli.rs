use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tvg_core::format::{self, RawTensor};
use tvg_core::pipeline;
use tvg_core::select::{SelectionTrace, Source};
use tvg_core::LatentVideo;

fn tvg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn scalars(v: &[f64]) -> LatentVideo {
    LatentVideo::new(v.len(), 1, 1, v.to_vec()).unwrap()
}

#[test]
fn gen_synthetic_default_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = tvg(dir.path(), &["gen-synthetic", "--out", "v.tvgl"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let len = fs::metadata(dir.path().join("v.tvgl")).unwrap().len();
    assert_eq!(len, 24 + 16 * 64 * 4 * 4);
    let v = format::read_tensor(dir.path().join("v.tvgl")).unwrap();
    assert_eq!(v.shape(), (16, 64, 4));
}

#[test]
fn gen_synthetic_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    for (name, seed) in [("a", "3"), ("b", "3"), ("c", "4")] {
        let file = format!("{name}.tvgl");
        let out = tvg(
            dir.path(),
            &[
                "gen-synthetic",
                "--pattern",
                "noise",
                "--seed",
                seed,
                "--out",
                &file,
            ],
        );
        assert_eq!(code(&out), 0);
    }
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.tvgl"), read("b.tvgl"));
    assert_ne!(read("a.tvgl"), read("c.tvgl"));
}

#[test]
fn gpr_smooth_two_frames_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = tvg(
        dir.path(),
        &["gen-synthetic", "--frames", "2", "--out", "in.tvgl"],
    );
    assert_eq!(code(&out), 0);
    let out = tvg(
        dir.path(),
        &["gpr-smooth", "--in", "in.tvgl", "--out", "out.tvgl"],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        fs::read(dir.path().join("in.tvgl")).unwrap(),
        fs::read(dir.path().join("out.tvgl")).unwrap()
    );
}

#[test]
fn gpr_smooth_keeps_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    tvg(
        dir.path(),
        &[
            "gen-synthetic",
            "--frames",
            "5",
            "--positions",
            "9",
            "--out",
            "in.tvgl",
        ],
    );
    let out = tvg(
        dir.path(),
        &[
            "gpr-smooth",
            "--in",
            "in.tvgl",
            "--out",
            "out.tvgl",
            "--length-scale",
            "2.5",
        ],
    );
    assert_eq!(code(&out), 0);
    let a = format::read_tensor(dir.path().join("in.tvgl")).unwrap();
    let b = format::read_tensor(dir.path().join("out.tvgl")).unwrap();
    assert_eq!(a.first_frame(), b.first_frame());
    assert_eq!(a.last_frame(), b.last_frame());
    assert_ne!(a.frame(2), b.frame(2));
}

#[test]
fn select_trace_on_hand_fixture() {
    let dir = tempfile::tempdir().unwrap();
    format::write_tensor(
        &scalars(&[0.0, 10.0, 20.0, 30.0]),
        dir.path().join("f.tvgl"),
    )
    .unwrap();
    // Raw reverse-direction order; shown forward it reads 0, 2, 4, 30.
    format::write_tensor(&scalars(&[30.0, 4.0, 2.0, 0.0]), dir.path().join("r.tvgl")).unwrap();
    let out = tvg(
        dir.path(),
        &[
            "select", "--fwd", "f.tvgl", "--rev", "r.tvgl", "--metric", "l2", "--out", "o.tvgl",
            "--trace", "t.txt",
        ],
    );
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(dir.path().join("t.txt")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "0 FORWARD - -");
    assert_eq!(text.lines().nth(1).unwrap(), "1 REVERSE 10 2");
    let trace = SelectionTrace::parse_text(&text).unwrap();
    assert_eq!(
        trace.sources(),
        [
            Source::Forward,
            Source::Reverse,
            Source::Reverse,
            Source::Forward
        ]
    );
    let merged = format::read_tensor(dir.path().join("o.tvgl")).unwrap();
    assert_eq!(merged.data(), &[0.0, 2.0, 4.0, 30.0]);
}

#[test]
fn slerp_writes_schedule() {
    let dir = tempfile::tempdir().unwrap();
    format::write_raw(
        &RawTensor::new([1, 2, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap(),
        dir.path().join("a.tvgl"),
    )
    .unwrap();
    format::write_raw(
        &RawTensor::new([1, 2, 3], vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0]).unwrap(),
        dir.path().join("b.tvgl"),
    )
    .unwrap();
    let out = tvg(
        dir.path(),
        &[
            "slerp", "--a", "a.tvgl", "--b", "b.tvgl", "--frames", "5", "--out", "s.tvgl",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = format::read_raw(dir.path().join("s.tvgl")).unwrap();
    assert_eq!(s.dims, [5, 2, 3]);
    let out = tvg(
        dir.path(),
        &[
            "slerp",
            "--a",
            "a.tvgl",
            "--b",
            "b.tvgl",
            "--per-token",
            "--out",
            "p.tvgl",
        ],
    );
    assert_eq!(code(&out), 0);
    let bad = tvg(
        dir.path(),
        &[
            "slerp",
            "--a",
            "a.tvgl",
            "--b",
            "b.tvgl",
            "--w-start",
            "1.5",
            "--out",
            "x.tvgl",
        ],
    );
    assert_eq!(code(&bad), 1);
}

#[test]
fn slerp_rejects_video_shaped_input() {
    let dir = tempfile::tempdir().unwrap();
    tvg(
        dir.path(),
        &["gen-synthetic", "--frames", "2", "--out", "v.tvgl"],
    );
    let out = tvg(
        dir.path(),
        &["slerp", "--a", "v.tvgl", "--b", "v.tvgl", "--out", "s.tvgl"],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn fuse_shape_mismatch_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    tvg(
        dir.path(),
        &["gen-synthetic", "--frames", "4", "--out", "a.tvgl"],
    );
    tvg(
        dir.path(),
        &["gen-synthetic", "--frames", "5", "--out", "b.tvgl"],
    );
    let out = tvg(
        dir.path(),
        &[
            "fuse", "--fwd", "a.tvgl", "--rev", "b.tvgl", "--out", "o.tvgl",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn export_frames_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Two channels have no pixmap layout.
    tvg(
        d,
        &[
            "gen-synthetic",
            "--frames",
            "2",
            "--positions",
            "4",
            "--channels",
            "2",
            "--out",
            "two.tvgl",
        ],
    );
    assert_eq!(
        code(&tvg(
            d,
            &["export-frames", "--in", "two.tvgl", "--out-dir", "x"]
        )),
        2
    );
    // 12 positions are not square without a height.
    tvg(
        d,
        &[
            "gen-synthetic",
            "--frames",
            "2",
            "--positions",
            "12",
            "--channels",
            "1",
            "--out",
            "r.tvgl",
        ],
    );
    assert_eq!(
        code(&tvg(
            d,
            &["export-frames", "--in", "r.tvgl", "--out-dir", "x"]
        )),
        2
    );
    assert_eq!(
        code(&tvg(
            d,
            &[
                "export-frames",
                "--in",
                "r.tvgl",
                "--out-dir",
                "x",
                "--height",
                "3"
            ]
        )),
        0
    );
    let header = b"P5\n4 3\n255\n";
    let bytes = fs::read(d.join("x/frame_0001.pgm")).unwrap();
    assert!(bytes.starts_with(header));
    assert_eq!(bytes.len(), header.len() + 12);
    assert_eq!(
        code(&tvg(
            d,
            &[
                "export-frames",
                "--in",
                "r.tvgl",
                "--out-dir",
                "x",
                "--normalize",
                "sideways"
            ]
        )),
        1
    );

    // A constant video has an empty range and exports as mid-gray.
    format::write_tensor(
        &LatentVideo::new(2, 4, 1, vec![0.5; 8]).unwrap(),
        d.join("c.tvgl"),
    )
    .unwrap();
    assert_eq!(
        code(&tvg(
            d,
            &[
                "export-frames",
                "--in",
                "c.tvgl",
                "--out-dir",
                "c",
                "--normalize",
                "per-frame"
            ]
        )),
        0
    );
    let bytes = fs::read(d.join("c/frame_0000.pgm")).unwrap();
    assert_eq!(&bytes[bytes.len() - 4..], &[128; 4]);
}

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    tvg(
        d,
        &[
            "gen-synthetic",
            "--frames",
            "2",
            "--positions",
            "16",
            "--channels",
            "2",
            "--out",
            "ends.tvgl",
        ],
    );
    fs::write(
        d.join("cfg.json"),
        r#"{"frames": 6, "seed": 1, "endpoints": "ends.tvgl", "out_dir": "out"}"#,
    )
    .unwrap();
    let out = tvg(d, &["run", "--config", "cfg.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        pipeline::OUTPUT_FILE,
        pipeline::REPORT_FILE,
        pipeline::TRACE_FILE,
        pipeline::TIMINGS_FILE,
    ] {
        assert!(d.join("out").join(f).exists(), "{f} missing");
    }
    let report = pipeline::RunReport::from_json(
        &fs::read_to_string(d.join("out").join(pipeline::REPORT_FILE)).unwrap(),
    )
    .unwrap();
    assert_eq!(report.config.frames, 6);
    assert_eq!(report.distance_profile.len(), 5);
    assert_eq!(report.selection.entries.len(), 6);
}

#[test]
fn run_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("unknown.json"), r#"{"frames": 6, "gama": 0.5}"#).unwrap();
    assert_eq!(code(&tvg(d, &["run", "--config", "unknown.json"])), 2);
    fs::write(d.join("noends.json"), r#"{"frames": 6}"#).unwrap();
    assert_eq!(code(&tvg(d, &["run", "--config", "noends.json"])), 2);
    tvg(
        d,
        &[
            "gen-synthetic",
            "--frames",
            "2",
            "--positions",
            "4",
            "--out",
            "ends.tvgl",
        ],
    );
    fs::write(
        d.join("gamma.json"),
        r#"{"gamma": 1.5, "endpoints": "ends.tvgl"}"#,
    )
    .unwrap();
    assert_eq!(code(&tvg(d, &["run", "--config", "gamma.json"])), 1);
    assert_eq!(code(&tvg(d, &["run", "--config", "missing.json"])), 2);
}

#[test]
fn help_and_version_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let help = tvg(dir.path(), &["--help"]);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("gen-synthetic"));
    assert_eq!(code(&tvg(dir.path(), &["--version"])), 0);
    assert_eq!(code(&tvg(dir.path(), &[])), 1);
}
