use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pixel_paq::jnd::{luma_weight, JndParams};
use pixel_paq::report::{cmd_compare, cmd_simulate, RunConfig};
use pixel_paq::synth::{write_synth_sequence, SynthConfig};
use pixel_paq::yuv_io::{create_sequence, open_sequence};
use pixel_paq::{ChromaFormat, Frame, QpMode, VideoSpec};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pixel-paq"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn pixel-paq")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_frames(path: &Path, spec: VideoSpec, frames: &[Frame]) {
    let mut sink = create_sequence(path, spec).unwrap();
    for f in frames {
        sink.write_frame(f).unwrap();
    }
    sink.finish().unwrap();
}

fn grey_input(dir: &Path) -> PathBuf {
    let spec = VideoSpec::new(64, 64, 8, ChromaFormat::C420, 1).unwrap();
    let path = dir.join("grey.yuv");
    write_frames(&path, spec, &[Frame::filled(&spec, 128, 128, 128)]);
    path
}

fn noise_input(dir: &Path, frames: usize) -> (PathBuf, VideoSpec) {
    let spec = VideoSpec::new(128, 96, 10, ChromaFormat::C444, frames).unwrap();
    let path = dir.join("noise.yuv");
    write_synth_sequence(&path, &SynthConfig::new(spec, 77)).unwrap();
    (path, spec)
}

#[test]
fn analyze_grey_frame() {
    let dir = tempfile::tempdir().unwrap();
    let input = grey_input(dir.path());
    let out = dir.path().join("out");
    let o = run(&[
        "analyze",
        "--input",
        s(&input),
        "--width",
        "64",
        "--height",
        "64",
        "--bit-depth",
        "8",
        "--chroma",
        "420",
        "--qp",
        "22",
        "--mode",
        "pixel-paq",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: Value = serde_json::from_slice(&fs::read(out.join("qpmap.json")).unwrap()).unwrap();
    assert_eq!(json["header"]["base_qp"], 22);
    assert_eq!(json["header"]["mode"], "pixel-paq");
    let records = json["frames"][0]["records"].as_array().unwrap();
    assert_eq!(records.len(), 1);
    let r = &records[0];
    assert_eq!(r["pqp_y"], 22);
    // chroma 128 sits above the upper knee: w = 1 + 2 * 38 / 165, offset round(3w) = 4
    assert_eq!(r["oqp_cb"], 26);
    assert_eq!(r["oqp_cr"], 26);
}

#[test]
fn analyze_flat_band_chroma_gets_minimum_offset() {
    let dir = tempfile::tempdir().unwrap();
    let spec = VideoSpec::new(64, 64, 8, ChromaFormat::C420, 1).unwrap();
    let input = dir.path().join("flat.yuv");
    write_frames(&input, spec, &[Frame::filled(&spec, 128, 88, 88)]);
    let out = dir.path().join("out");
    let o = run(&[
        "analyze",
        "--input",
        s(&input),
        "--width",
        "64",
        "--height",
        "64",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let json: Value = serde_json::from_slice(&fs::read(out.join("qpmap.json")).unwrap()).unwrap();
    let r = &json["frames"][0]["records"][0];
    assert_eq!(
        (r["pqp_y"].as_i64(), r["oqp_cb"].as_i64()),
        (Some(22), Some(25))
    );
}

#[test]
fn analyze_csv_matches_json() {
    let dir = tempfile::tempdir().unwrap();
    let (input, _) = noise_input(dir.path(), 3);
    let out = dir.path().join("out");
    let o = run(&[
        "analyze",
        "--input",
        s(&input),
        "--width",
        "128",
        "--height",
        "96",
        "--bit-depth",
        "10",
        "--chroma",
        "444",
        "--cb-size",
        "32",
        "--qp",
        "27",
        "--frames",
        "1..3",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: Value = serde_json::from_slice(&fs::read(out.join("qpmap.json")).unwrap()).unwrap();
    let csv = fs::read_to_string(out.join("qpmap.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let frames = json["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 2);
    assert_eq!(frames[0]["frame"], 1);
    let mut i = 0;
    for f in frames {
        for rec in f["records"].as_array().unwrap() {
            let row = &rows[i];
            assert_eq!(row[0], f["frame"].as_f64().unwrap());
            for (col, name) in header.iter().enumerate().skip(1) {
                assert_eq!(row[col], rec[*name].as_f64().unwrap(), "{name} row {i}");
            }
            i += 1;
        }
    }
    assert_eq!(i, rows.len());
    assert_eq!(i, 2 * 4 * 3);
}

#[test]
fn analyze_uniform_keeps_base_qp() {
    let dir = tempfile::tempdir().unwrap();
    let (input, _) = noise_input(dir.path(), 1);
    let out = dir.path().join("out");
    let o = run(&[
        "analyze",
        "--input",
        s(&input),
        "--width",
        "128",
        "--height",
        "96",
        "--bit-depth",
        "10",
        "--chroma",
        "444",
        "--cb-size",
        "16",
        "--qp",
        "31",
        "--mode",
        "uniform",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let json: Value = serde_json::from_slice(&fs::read(out.join("qpmap.json")).unwrap()).unwrap();
    for r in json["frames"][0]["records"].as_array().unwrap() {
        assert_eq!(r["pqp_y"], 31);
        assert_eq!(r["oqp_cb"], 31);
    }
}

#[test]
fn analyze_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (input, _) = noise_input(dir.path(), 2);
    let mut outs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = run(&[
            "analyze",
            "--input",
            s(&input),
            "--width",
            "128",
            "--height",
            "96",
            "--bit-depth",
            "10",
            "--chroma",
            "444",
            "--cb-size",
            "16",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success());
        outs.push((
            fs::read(out.join("qpmap.json")).unwrap(),
            fs::read(out.join("qpmap.csv")).unwrap(),
        ));
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn missing_input_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for cmd in ["analyze", "simulate", "compare"] {
        let o = run(&[
            cmd,
            "--input",
            s(&dir.path().join("absent.yuv")),
            "--width",
            "64",
            "--height",
            "64",
            "--frame-count",
            "1",
            "--out",
            s(&out),
        ]);
        assert_eq!(o.status.code(), Some(3), "{cmd}");
        assert!(!out.exists(), "{cmd}");
        // frame count inferred from the file also reports a missing file
        let o = run(&[
            cmd,
            "--input",
            s(&dir.path().join("absent.yuv")),
            "--width",
            "64",
            "--height",
            "64",
            "--out",
            s(&out),
        ]);
        assert_eq!(o.status.code(), Some(3), "{cmd}");
    }
}

#[test]
fn exit_codes_by_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let input = grey_input(dir.path());
    let out = dir.path().join("out");
    let base = [
        "--input",
        s(&input),
        "--width",
        "64",
        "--height",
        "64",
        "--out",
        s(&out),
    ];

    let with = |extra: &[&str]| {
        let mut args = vec!["analyze"];
        args.extend_from_slice(&base);
        args.extend_from_slice(extra);
        run(&args).status.code()
    };
    assert_eq!(with(&["--qp", "60"]), Some(2));
    assert_eq!(with(&["--cb-size", "8"]), Some(2));
    assert_eq!(with(&["--frames", "0..5"]), Some(2));
    assert_eq!(with(&["--mode", "bogus"]), Some(2));
    // wrong geometry: file length is not a whole number of frames
    let o = run(&[
        "analyze",
        "--input",
        s(&input),
        "--width",
        "48",
        "--height",
        "64",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.exists());

    // 10-bit container holding an out-of-range sample
    let bad = dir.path().join("bad.yuv");
    let spec = VideoSpec::new(16, 16, 10, ChromaFormat::C420, 1).unwrap();
    let mut bytes = vec![0u8; spec.frame_byte_size() as usize];
    bytes[0..2].copy_from_slice(&1024u16.to_le_bytes());
    fs::write(&bad, bytes).unwrap();
    let o = run(&[
        "analyze",
        "--input",
        s(&bad),
        "--width",
        "16",
        "--height",
        "16",
        "--bit-depth",
        "10",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(4));
    assert!(!out.exists());
}

#[test]
fn compare_needs_two_modes() {
    let dir = tempfile::tempdir().unwrap();
    let input = grey_input(dir.path());
    let out = dir.path().join("out");
    let o = run(&[
        "compare",
        "--input",
        s(&input),
        "--width",
        "64",
        "--height",
        "64",
        "--modes",
        "pixel-paq",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn compare_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (input, _) = noise_input(dir.path(), 2);
    let out = dir.path().join("out");
    let o = run(&[
        "compare",
        "--input",
        s(&input),
        "--width",
        "128",
        "--height",
        "96",
        "--bit-depth",
        "10",
        "--chroma",
        "444",
        "--cb-size",
        "32",
        "--modes",
        "pixel-paq,idsq,uniform",
        "--qps",
        "22,37",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: Value = serde_json::from_slice(&fs::read(out.join("compare.json")).unwrap()).unwrap();
    assert_eq!(json["qp_points"].as_array().unwrap().len(), 2);
    assert_eq!(json["overall"].as_array().unwrap().len(), 2);
    let cmp = &json["qp_points"][0]["comparisons"][0];
    assert_eq!(cmp["candidate"], "pixel-paq");
    assert_eq!(cmp["reference"], "idsq");
    assert_eq!(cmp["psnr_delta"]["y"], 0.0);
    assert!(cmp["chroma_bits_reduction_pct"].as_f64().unwrap() > 0.0);
}

#[test]
fn idsq_never_costs_more_than_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let (input, spec) = noise_input(dir.path(), 4);
    let mut c = RunConfig::new(&input, spec, dir.path().join("out"));
    c.cb_size = 16;
    let (_, summary) = cmd_compare(&c, &[QpMode::Idsq, QpMode::Uniform], &[22, 32]).unwrap();
    for point in &summary.qp_points {
        for f in &point.comparisons[0].per_frame {
            let idsq = &point.modes[0].per_frame[f.frame];
            let uniform = &point.modes[1].per_frame[f.frame];
            assert!(
                idsq.bits.total <= uniform.bits.total,
                "QP {} frame {}",
                point.base_qp,
                f.frame
            );
        }
    }
}

#[test]
fn simulate_constant_frame() {
    let dir = tempfile::tempdir().unwrap();
    let spec = VideoSpec::new(64, 48, 10, ChromaFormat::C422, 2).unwrap();
    let input = dir.path().join("const.yuv");
    write_frames(
        &input,
        spec,
        &[
            Frame::filled(&spec, 700, 100, 900),
            Frame::filled(&spec, 3, 512, 512),
        ],
    );
    let out = dir.path().join("out");
    let o = run(&[
        "simulate",
        "--input",
        s(&input),
        "--width",
        "64",
        "--height",
        "48",
        "--bit-depth",
        "10",
        "--chroma",
        "422",
        "--cb-size",
        "16",
        "--qp",
        "37",
        "--emit-recon",
        "--emit-ssim-maps",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: Value =
        serde_json::from_slice(&fs::read(out.join("simulate.json")).unwrap()).unwrap();
    for ch in ["y", "cb", "cr"] {
        assert_eq!(json["aggregate"]["psnr"][ch], "inf");
        assert_eq!(json["frames"][1]["psnr"][ch], "inf");
    }
    assert_eq!(json["aggregate"]["jnd_pass_rate"]["all"], 1.0);
    let csv = fs::read_to_string(out.join("jnd_pass.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4 * 3);
    assert!(csv.lines().skip(1).all(|l| l.matches("true").count() == 3));
    for ch in ["y", "cb", "cr"] {
        let pgm = fs::read(out.join(format!("ssim_f00001_{ch}.pgm"))).unwrap();
        assert!(pgm.starts_with(b"P5\n"));
    }
    let mut recon = open_sequence(&out.join("recon.yuv"), spec).unwrap();
    assert_eq!(
        recon.read_frame(0).unwrap(),
        Frame::filled(&spec, 700, 100, 900)
    );
}

#[test]
fn simulate_recon_stays_in_range() {
    let dir = tempfile::tempdir().unwrap();
    let (input, spec) = noise_input(dir.path(), 2);
    let mut c = RunConfig::new(&input, spec, dir.path().join("out"));
    c.base_qp = 51;
    c.emit_recon = true;
    let out = cmd_simulate(&c).unwrap();
    // reading validates every sample against the bit depth
    let mut recon = open_sequence(out.recon.as_ref().unwrap(), spec).unwrap();
    for i in 0..2 {
        recon.read_frame(i).unwrap();
    }
}

#[test]
fn simulate_pixel_paq_cheaper_than_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let (input, spec) = noise_input(dir.path(), 2);
    let mut bits = Vec::new();
    for mode in [QpMode::PixelPaq, QpMode::Uniform] {
        let mut c = RunConfig::new(&input, spec, dir.path().join(mode.as_str()));
        c.cb_size = 32;
        c.mode = mode;
        bits.push(cmd_simulate(&c).unwrap().report.aggregate.bits.total);
    }
    assert!(bits[0] < bits[1], "{bits:?}");
}

#[test]
fn curves_are_scale_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "curves",
        "--bit-depth",
        "8,10",
        "--points",
        "256",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success());
    let read = |name: &str| -> Vec<(f64, f64)> {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("mu,weight"));
        lines
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect()
    };
    let p = JndParams::default();
    let b8 = read("curve_luma_b8.csv");
    let b10 = read("curve_luma_b10.csv");
    assert_eq!((b8.len(), b10.len()), (256, 256));
    for (mu, w) in &b8 {
        assert!((luma_weight(mu * 4.0, 10, &p).unwrap() - w).abs() <= 1e-12);
    }
    for (mu, w) in b10.iter().filter(|(mu, _)| *mu <= 1020.0) {
        assert!((luma_weight(mu / 4.0, 8, &p).unwrap() - w).abs() <= 1e-12);
    }
    assert_eq!(read("curve_chroma_b8.csv").len(), 256);
}

#[test]
fn curves_endpoints_and_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "curves",
        "--bit-depth",
        "8",
        "--points",
        "3",
        "--out",
        s(dir.path()),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("curve_luma_b8.csv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[1], "0,3");
    assert_eq!(rows[3], "255,1.787548828125");

    let empty = dir.path().join("none");
    let o = run(&[
        "curves",
        "--bit-depth",
        "8",
        "--points",
        "1",
        "--out",
        s(&empty),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!empty.exists());
}

#[test]
fn info_reports_raw_size() {
    let o = run(&[
        "info",
        "--width",
        "1920",
        "--height",
        "1080",
        "--bit-depth",
        "10",
        "--chroma",
        "444",
        "--frame-count",
        "600",
    ]);
    assert!(o.status.success());
    let json: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["sequence_bytes"], 7_464_960_000u64);
    assert_eq!(json["luma_cbs"], 30 * 17);
}

#[test]
fn synth_and_spec_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("synth.yuv");
    let o = run(&[
        "synth",
        "--width",
        "64",
        "--height",
        "32",
        "--bit-depth",
        "12",
        "--chroma",
        "422",
        "--frame-count",
        "3",
        "--seed",
        "9",
        "--out",
        s(&seq),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::metadata(&seq).unwrap().len(),
        3 * (64 * 32 + 2 * 32 * 32) * 2
    );

    let sidecar = dir.path().join("spec.json");
    fs::write(
        &sidecar,
        r#"{"width":64,"height":32,"bit_depth":12,"chroma_format":"422","frame_count":3}"#,
    )
    .unwrap();
    let o = run(&["info", "--spec", s(&sidecar)]);
    assert!(o.status.success());
    let json: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["chroma_plane"], serde_json::json!([32, 32]));

    let out = dir.path().join("out");
    let o = run(&[
        "analyze",
        "--input",
        s(&seq),
        "--spec",
        s(&sidecar),
        "--frames",
        "1..3",
        "--cb-size",
        "16",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // frame count inferred from the file when not given
    let o = run(&[
        "info",
        "--input",
        s(&seq),
        "--width",
        "64",
        "--height",
        "32",
        "--bit-depth",
        "12",
        "--chroma",
        "422",
    ]);
    let json: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["spec"]["frame_count"], 3);
}
