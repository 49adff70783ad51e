#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{TimeZone, Utc};
use inpaint_eval_core::imaging::Image;
use inpaint_eval_core::judgements::{
    write_judgements, write_verification_key, PairwiseJudgement, Side, VerificationKey,
};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_inpaint-eval"))
}

pub fn run<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(bin())
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> String {
    path.to_str().unwrap().to_owned()
}

/// Image whose pixels vary with position and `seed`.
pub fn pattern(w: usize, h: usize, seed: u8) -> Image {
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            data.extend([
                (x * 7 + y * 3) as u8 ^ seed,
                (x * y) as u8,
                ((y * 11) as u8).wrapping_add(seed),
            ]);
        }
    }
    Image::from_raw(w, h, data).unwrap()
}

pub fn judgement(session: &str, image: &str, left: &str, right: &str, chosen: Side, ver: bool) -> PairwiseJudgement {
    PairwiseJudgement {
        session_id: session.into(),
        image_id: image.into(),
        left_variant: left.into(),
        right_variant: right.into(),
        chosen,
        is_verification: ver,
        timestamp: Utc.with_ymd_and_hms(2024, 5, 1, 12, 0, 0).unwrap(),
    }
}

pub fn write_study(dir: &Path, judgements: &[PairwiseJudgement], key: &VerificationKey) -> (PathBuf, PathBuf) {
    let j = dir.join("judgements.csv");
    let k = dir.join("key.csv");
    write_judgements(judgements, std::fs::File::create(&j).unwrap()).unwrap();
    write_verification_key(key, std::fs::File::create(&k).unwrap()).unwrap();
    (j, k)
}
