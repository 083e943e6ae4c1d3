//! End-to-end runs of the `rpcc` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rpcc::io::{kitti_bin_bytes, parse_kitti_bin, parse_rimg, read_scan, ScanFormat};
use rpcc::Point3;
use tempfile::TempDir;

fn rpcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpcc")).args(args).output().expect("spawn rpcc")
}

fn ok(args: &[&str]) -> Output {
    let out = rpcc(args);
    assert!(out.status.success(), "rpcc {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small 16-beam room scene written as rimg.
fn room(dir: &TempDir, name: &str) -> PathBuf {
    let path = dir.path().join(name);
    ok(&["gen-scene", "--kind", "room", "--seed", "4", "--sensor", "vlp16", "--hres", "0.5", "-o", s(&path)]);
    path
}

#[test]
fn compress_decompress_evaluate_pipeline() {
    let dir = TempDir::new().unwrap();
    let input = room(&dir, "room.rimg");
    let frame = dir.path().join("room.rpcc");
    let output = dir.path().join("room.out.rimg");

    let stats = json(&ok(&["compress", s(&input), "-o", s(&frame), "--accuracy", "0.04"]));
    assert_eq!(stats[0]["dropped_count"], 0);
    ok(&["decompress", s(&frame), "-o", s(&output)]);

    let a = parse_rimg(&fs::read(&input).unwrap()).unwrap();
    let b = parse_rimg(&fs::read(&output).unwrap()).unwrap();
    assert_eq!(a.valid_mask(), b.valid_mask());
    let worst = a.valid_indices().map(|i| (a.depths()[i] - b.depths()[i]).abs()).fold(0.0, f64::max);
    assert!(worst <= 0.02 + 1e-9, "worst error {worst}");

    let report = json(&ok(&["evaluate", s(&input), s(&output), "--compressed", s(&frame)]));
    assert_eq!(report["original_points"], report["reconstructed_points"]);
    assert!(report["cd_sym"].as_f64().unwrap() < 0.02);
    assert!(report["rate"]["bpp"].as_f64().unwrap() < 96.0);
}

#[test]
fn decompress_to_point_formats() {
    let dir = TempDir::new().unwrap();
    let input = room(&dir, "room.rimg");
    let frame = dir.path().join("room.rpcc");
    ok(&["compress", s(&input), "-o", s(&frame)]);
    let n = parse_rimg(&fs::read(&input).unwrap()).unwrap().valid_count();
    for ext in ["bin", "xyz"] {
        let out = dir.path().join(format!("room.{ext}"));
        ok(&["decompress", s(&frame), "-o", s(&out)]);
        let fmt = ScanFormat::from_path(&out).unwrap();
        assert_eq!(read_scan(&out, fmt).unwrap().into_points().len(), n);
    }
}

#[test]
fn multi_frame_stream() {
    let dir = TempDir::new().unwrap();
    let a = room(&dir, "a.rimg");
    let b = dir.path().join("b.rimg");
    ok(&["gen-scene", "--kind", "clutter", "--sensor", "vlp16", "-o", s(&b)]);
    let frame = dir.path().join("both.rpcc");
    let stats = json(&ok(&["compress", s(&a), s(&b), "-o", s(&frame)]));
    assert_eq!(stats.as_array().unwrap().len(), 2);
    ok(&["decompress", s(&frame), "-o", s(&dir.path().join("out.rimg"))]);
    assert!(dir.path().join("out_0000.rimg").exists());
    assert!(dir.path().join("out_0001.rimg").exists());
}

#[test]
fn non_rpcc_input_is_a_corrupt_frame() {
    let dir = TempDir::new().unwrap();
    let junk = dir.path().join("junk.rpcc");
    fs::write(&junk, b"this is not a compressed frame at all, just text").unwrap();
    let out = rpcc(&["decompress", s(&junk), "-o", s(&dir.path().join("x.xyz"))]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt"));
}

#[test]
fn evaluate_identical_files() {
    let dir = TempDir::new().unwrap();
    let input = room(&dir, "room.rimg");
    let report = json(&ok(&["evaluate", s(&input), s(&input)]));
    assert_eq!(report["cd_sym"].as_f64(), Some(0.0));
    assert_eq!(report["f1"].as_f64(), Some(1.0));
}

#[test]
fn kitti_bin_lengths() {
    let dir = TempDir::new().unwrap();
    let short = dir.path().join("short.bin");
    fs::write(&short, [0u8; 15]).unwrap();
    let frame = dir.path().join("x.rpcc");
    let out = rpcc(&["compress", s(&short), "-o", s(&frame)]);
    assert_eq!(out.status.code(), Some(3));

    let one = dir.path().join("one.bin");
    fs::write(&one, kitti_bin_bytes(&[Point3::new(10.0, 0.0, 0.0)])).unwrap();
    let stats = json(&ok(&["compress", s(&one), "-o", s(&frame)]));
    assert_eq!(stats[0]["stats"]["valid_points"], 1);
}

#[test]
fn exit_codes_are_distinct() {
    let dir = TempDir::new().unwrap();
    let input = room(&dir, "room.rimg");
    let frame = dir.path().join("x.rpcc");
    // config: rejected by validation
    let cfg = rpcc(&["compress", s(&input), "-o", s(&frame), "--accuracy", "-1"]);
    assert_eq!(cfg.status.code(), Some(2));
    // usage: rejected by the argument parser
    assert_eq!(rpcc(&["compress", "--backend", "zstd", s(&input), "-o", s(&frame)]).status.code(), Some(2));
    // io
    let missing = dir.path().join("missing.bin");
    assert_eq!(rpcc(&["compress", s(&missing), "-o", s(&frame)]).status.code(), Some(5));
}

/// Fixture point `i`: exactly representable in f32.
fn fixture_point(i: usize) -> Point3 {
    let t = i as f64;
    Point3::new(5.0 + t * 0.25, -3.0 + t * 0.125, -1.5 + (i % 8) as f64 * 0.0625)
}

#[test]
fn hundred_point_fixture() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/points100.bin");
    let expected: Vec<Point3> = (0..100).map(fixture_point).collect();
    if std::env::var("RPCC_BLESS").is_ok_and(|v| v == "1") {
        fs::write(&path, kitti_bin_bytes(&expected)).unwrap();
    }
    let bytes = fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 1600);
    assert_eq!(parse_kitti_bin(&bytes).unwrap(), expected);

    // the binary reads it as well
    let dir = TempDir::new().unwrap();
    let frame = dir.path().join("p.rpcc");
    let stats = json(&ok(&["compress", s(&path), "-o", s(&frame), "--sensor", "hdl64e", "--phi-min", "-30"]));
    let dropped = stats[0]["dropped_count"].as_u64().unwrap();
    assert_eq!(stats[0]["stats"]["valid_points"].as_u64().unwrap() + dropped, 100);
}

#[test]
fn sweep_rows_and_backend_independence() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    room(&dir, "corpus/room.rimg");

    let out = ok(&["sweep", s(&corpus), "--clusters", "20,60"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");

    let out = ok(&["sweep", s(&corpus), "--backends", "lz4,deflate,bzip2,arithmetic"]);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let cd = headers.iter().position(|h| h == "cd_sym").unwrap();
    let values: Vec<String> = rdr.records().map(|r| r.unwrap()[cd].to_string()).collect();
    assert_eq!(values.len(), 4);
    assert!(values.iter().all(|v| *v == values[0]), "{values:?}");
}

#[test]
fn sweep_rates_on_room() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir(&corpus).unwrap();
    room(&dir, "corpus/room.rimg");
    let out = ok(&["sweep", s(&corpus), "--modes", "uniform,nonuniform"]);
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (mode, bpp) = (col("mode"), col("total_bpp"));
    let rows: Vec<(String, f64)> =
        rdr.records().map(|r| r.unwrap()).map(|r| (r[mode].to_string(), r[bpp].parse().unwrap())).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|(_, b)| *b < 96.0));
    assert!(rows[1].1 <= rows[0].1, "{rows:?}");
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let input = room(&dir, "room.rimg");
    let again = room(&dir, "room2.rimg");
    assert_eq!(fs::read(&input).unwrap(), fs::read(&again).unwrap());
    for backend in ["lz4", "deflate", "bzip2", "arithmetic"] {
        let a = dir.path().join("a.rpcc");
        let b = dir.path().join("b.rpcc");
        let sa = ok(&["compress", s(&input), "-o", s(&a), "--backend", backend, "--mode", "nonuniform"]);
        let sb = ok(&["compress", s(&input), "-o", s(&b), "--backend", backend, "--mode", "nonuniform"]);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{backend}");
        let strip = |o: &Output| {
            let mut v = json(o);
            v[0]["stats"]["timings"] = serde_json::Value::Null;
            v
        };
        assert_eq!(strip(&sa)["stats"]["total_bytes"], strip(&sb)["stats"]["total_bytes"]);
    }
}
