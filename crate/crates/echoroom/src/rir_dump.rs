//! Raw impulse responses for a static pose, one text file per microphone.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use echoroom_core::acoustic_sim::synthesize_rir;
use echoroom_core::rig::{mic_positions, RigPose};
use echoroom_core::{Point2, Rir, Room, SimConfig};

use crate::error::Result;

/// RIRs of the four microphones of `pose`, in room coordinates.
pub fn rirs_for_pose(room: &Room, pose: &RigPose, sim: &SimConfig) -> Result<[Rir; 4]> {
    let mics = mic_positions(pose);
    let mut out = Vec::with_capacity(4);
    for (k, m) in mics.iter().enumerate() {
        out.push(synthesize_rir(room, pose.center, *m, k + 1, sim)?);
    }
    Ok(out.try_into().expect("four microphones"))
}

/// Two whitespace-separated columns, `index amplitude`, one sample per line.
pub fn write_rir<W: Write>(out: W, rir: &Rir) -> Result<()> {
    let mut w = BufWriter::new(out);
    for (i, s) in rir.samples.iter().enumerate() {
        writeln!(w, "{i} {s:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn rir_path(dir: &Path, mic_index: usize) -> PathBuf {
    dir.join(format!("rir_mic{mic_index}.txt"))
}

/// Writes `rir_mic1.txt` … `rir_mic4.txt` and returns their paths.
pub fn dump_rirs(dir: &Path, room: &Room, center: Point2, arm_angle: f64, extension: f64, sim: &SimConfig) -> Result<Vec<PathBuf>> {
    let pose = RigPose::new(center, arm_angle, extension)?;
    let rirs = rirs_for_pose(room, &pose, sim)?;
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for rir in &rirs {
        let p = rir_path(dir, rir.mic_index);
        write_rir(fs::File::create(&p)?, rir)?;
        paths.push(p);
    }
    Ok(paths)
}
