use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stillflow"))
        .args(args)
        .output()
        .expect("spawn stillflow")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn count_files(dir: &Path, ext: &str) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().map_or(false, |x| x == ext))
        .count()
}

/// Independent GIF reader: walks the block structure and counts image
/// descriptors (0x2C), skipping extensions and color tables.
fn gif_frame_count(bytes: &[u8]) -> usize {
    assert_eq!(&bytes[..3], b"GIF");
    let mut i = 6; // header
    let flags = bytes[i + 4];
    i += 7; // logical screen descriptor
    if flags & 0x80 != 0 {
        i += 3 * (1 << ((flags & 0x07) + 1)); // global color table
    }
    let mut frames = 0;
    loop {
        match bytes[i] {
            0x3B => break,
            0x21 => {
                i += 2; // introducer + label
                while bytes[i] != 0 {
                    i += 1 + bytes[i] as usize;
                }
                i += 1;
            }
            0x2C => {
                frames += 1;
                let lflags = bytes[i + 9];
                i += 10;
                if lflags & 0x80 != 0 {
                    i += 3 * (1 << ((lflags & 0x07) + 1)); // local color table
                }
                i += 1; // LZW minimum code size
                while bytes[i] != 0 {
                    i += 1 + bytes[i] as usize;
                }
                i += 1;
            }
            other => panic!("unexpected GIF block 0x{other:02X} at {i}"),
        }
    }
    frames
}

#[test]
fn make_synthetic_and_export_gif() {
    let dir = tempfile::tempdir().unwrap();
    let clip = dir.path().join("clip");
    assert_ok(&run(&[
        "make-synthetic",
        "--kind", "translate",
        "--length", "6",
        "--height", "32",
        "--width", "32",
        "--max-disp", "4",
        "--seed", "1",
        "--out", clip.to_str().unwrap(),
    ]));
    assert_eq!(count_files(&clip.join("frames"), "png"), 6);
    assert_eq!(count_files(&clip.join("flows"), "flo"), 5);
    assert!(clip.join("run.log").exists());

    let gif = dir.path().join("a.gif");
    assert_ok(&run(&[
        "export-gif",
        "--frames", clip.join("frames").to_str().unwrap(),
        "--delay-ms", "100",
        "--out", gif.to_str().unwrap(),
    ]));
    assert_eq!(gif_frame_count(&std::fs::read(&gif).unwrap()), 6);

    // single-frame degenerate case
    let one = dir.path().join("one");
    std::fs::create_dir(&one).unwrap();
    std::fs::copy(clip.join("frames/000.png"), one.join("000.png")).unwrap();
    let gif1 = dir.path().join("one.gif");
    assert_ok(&run(&[
        "export-gif",
        "--frames", one.to_str().unwrap(),
        "--out", gif1.to_str().unwrap(),
    ]));
    assert_eq!(gif_frame_count(&std::fs::read(&gif1).unwrap()), 1);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "bogus_key = 1\n").unwrap();
    let out = run(&[
        "make-synthetic",
        "--config", cfg.to_str().unwrap(),
        "--out", dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));
}

#[test]
fn unknown_command_exits_2() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn motion_budget_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "make-synthetic",
        "--kind", "translate",
        "--max-disp", "0.5", // default velocity exceeds this budget
        "--out", dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn end_to_end_train_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let clip = data.join("clip00");
    assert_ok(&run(&[
        "make-synthetic",
        "--kind", "translate",
        "--length", "9",
        "--height", "32",
        "--width", "32",
        "--max-disp", "4",
        "--seed", "2",
        "--out", clip.to_str().unwrap(),
    ]));

    let flow_cfg = dir.path().join("flow.cfg");
    std::fs::write(
        &flow_cfg,
        "m = 8\nlatent_dim = 8\nmax_disp = 4\nchannel_scale = 16\n\
         max_steps = 2\nbatch_size = 1\nseed = 3\n",
    )
    .unwrap();
    let vae_dir = dir.path().join("vae");
    assert_ok(&run(&[
        "train-flow",
        "--config", flow_cfg.to_str().unwrap(),
        "--data", data.to_str().unwrap(),
        "--out", vae_dir.to_str().unwrap(),
    ]));
    let vae_ckpt = vae_dir.join("flow_vae.fsv");
    assert!(vae_ckpt.exists());
    assert!(vae_dir.join("train_flow_vae.csv").exists());
    assert!(vae_dir.join("run.log").exists());

    let frame_cfg = dir.path().join("frame.cfg");
    std::fs::write(
        &frame_cfg,
        "widths = 8,16\nconvs_per_stage = 1,1\nmax_disp = 4\n\
         max_steps = 2\nbatch_size = 1\nseed = 4\n",
    )
    .unwrap();
    let gen_dir = dir.path().join("gen");
    assert_ok(&run(&[
        "train-frame",
        "--config", frame_cfg.to_str().unwrap(),
        "--data", data.to_str().unwrap(),
        "--out", gen_dir.to_str().unwrap(),
    ]));
    let gen_ckpt = gen_dir.join("flow2rgb.fsv");
    assert!(gen_ckpt.exists());

    let pred = dir.path().join("pred");
    assert_ok(&run(&[
        "predict",
        "--image", clip.join("frames/000.png").to_str().unwrap(),
        "--vae", vae_ckpt.to_str().unwrap(),
        "--gen", gen_ckpt.to_str().unwrap(),
        "--seed", "7",
        "--out", pred.to_str().unwrap(),
    ]));
    assert_eq!(count_files(&pred.join("frames"), "png"), 8);
    assert_eq!(count_files(&pred.join("flows"), "flo"), 8);
    assert!(pred.join("anim.gif").exists());
    assert!(pred.join("run.log").exists());
    assert_eq!(
        gif_frame_count(&std::fs::read(pred.join("anim.gif")).unwrap()),
        8
    );

    // identical invocation reproduces the frames bit-for-bit
    let pred2 = dir.path().join("pred2");
    assert_ok(&run(&[
        "predict",
        "--image", clip.join("frames/000.png").to_str().unwrap(),
        "--vae", vae_ckpt.to_str().unwrap(),
        "--gen", gen_ckpt.to_str().unwrap(),
        "--seed", "7",
        "--out", pred2.to_str().unwrap(),
    ]));
    assert_eq!(
        std::fs::read(pred.join("frames/000.png")).unwrap(),
        std::fs::read(pred2.join("frames/000.png")).unwrap()
    );
    assert_eq!(
        std::fs::read(pred.join("anim.gif")).unwrap(),
        std::fs::read(pred2.join("anim.gif")).unwrap()
    );

    let csv = dir.path().join("m.csv");
    assert_ok(&run(&[
        "evaluate",
        "--pred", pred.to_str().unwrap(),
        "--gt", clip.to_str().unwrap(),
        "--metrics", "all",
        "--out", csv.to_str().unwrap(),
    ]));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("method,metric,t,value"));
    assert!(text.contains("rmse_frames"));
    assert!(text.contains("rmse_flows"));
    assert!(text.contains("perceptual"));

    let roll = dir.path().join("roll");
    assert_ok(&run(&[
        "rollout",
        "--image", clip.join("frames/000.png").to_str().unwrap(),
        "--flows", clip.join("flows").to_str().unwrap(),
        "--gen", gen_ckpt.to_str().unwrap(),
        "--mode", "warp-only",
        "--out", roll.to_str().unwrap(),
    ]));
    assert_eq!(count_files(&roll.join("frames"), "png"), 8);

    // mismatched checkpoint budgets: exit 2, no partial outputs
    let frame_cfg2 = dir.path().join("frame2.cfg");
    std::fs::write(
        &frame_cfg2,
        "widths = 8,16\nconvs_per_stage = 1,1\nmax_disp = 5\n\
         max_steps = 1\nbatch_size = 1\nseed = 5\n",
    )
    .unwrap();
    let gen2_dir = dir.path().join("gen2");
    assert_ok(&run(&[
        "train-frame",
        "--config", frame_cfg2.to_str().unwrap(),
        "--data", data.to_str().unwrap(),
        "--out", gen2_dir.to_str().unwrap(),
    ]));
    let bad = dir.path().join("bad");
    let out = run(&[
        "predict",
        "--image", clip.join("frames/000.png").to_str().unwrap(),
        "--vae", vae_ckpt.to_str().unwrap(),
        "--gen", gen2_dir.join("flow2rgb.fsv").to_str().unwrap(),
        "--out", bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!bad.exists());
}
