//! Common image sources from four microphones' echo lists.
//!
//! Each TOA triple is turned into a position by the 2×2 linear system
//! obtained from subtracting circle equations of consecutive microphones.
//! Three triples `(1,2,3)`, `(2,3,4)` and `(3,4,1)` are solved for every
//! combination of one echo per microphone; a combination is kept when the
//! three solutions agree within `match_radius`.

use alloc::vec::Vec;

use crate::echoes::EchoEvent;
use crate::error::{Error, Result};
use crate::geometry::{point_side, tol, wall_line_from_source_and_is, Line2, Point2};
use crate::math;

/// Minimum |det| of the triple system.
pub const SINGULAR_DET: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MicArrayObservation {
    pub mic_positions: [Point2; 4],
    /// Echo lists per microphone, ascending in time.
    pub echo_lists: [Vec<EchoEvent>; 4],
    pub source_position: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CandidateIs {
    pub position: Point2,
    /// One TOA per microphone, seconds.
    pub supporting_toas: [f64; 4],
    /// Largest pairwise distance between the three triple solutions.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct IsLocateConfig {
    /// m/s
    pub speed_of_sound: f64,
    /// Meters.
    pub match_radius: f64,
    pub max_echoes_per_mic: usize,
    /// Echoes within this many seconds of the direct path are dropped.
    pub direct_path_tolerance: f64,
}

impl Default for IsLocateConfig {
    fn default() -> Self {
        Self {
            speed_of_sound: 343.0,
            match_radius: 0.05,
            max_echoes_per_mic: 12,
            direct_path_tolerance: 1.5 / 96_000.0,
        }
    }
}

impl IsLocateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed_of_sound > 0.0) {
            return Err(Error::InvalidConfig("speed_of_sound must be positive"));
        }
        if !(self.match_radius > 0.0) {
            return Err(Error::InvalidConfig("match_radius must be positive"));
        }
        if self.max_echoes_per_mic == 0 {
            return Err(Error::InvalidConfig("max_echoes_per_mic must be positive"));
        }
        if !(self.direct_path_tolerance >= 0.0) {
            return Err(Error::InvalidConfig("direct_path_tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// Position consistent with ranges `t_k · c` from the three microphones.
///
/// Solves `[ (m1 − m2)ᵀ ; (m2 − m3)ᵀ ] · p = b` with
/// `b_1 = ½(x1² − x2² + y1² − y2² − (t1·c)² + (t2·c)²)` and `b_2` likewise
/// for microphones 2 and 3.
pub fn solve_is_triple(m1: Point2, m2: Point2, m3: Point2, t1: f64, t2: f64, t3: f64, c: f64) -> Result<Point2> {
    let r1 = m1 - m2;
    let r2 = m2 - m3;
    let det = r1.cross(r2);
    if !(math::abs(det) > SINGULAR_DET) {
        return Err(Error::SingularGeometry(math::abs(det)));
    }
    let (d1, d2, d3) = (t1 * c, t2 * c, t3 * c);
    let b1 = 0.5 * (m1.x * m1.x - m2.x * m2.x + m1.y * m1.y - m2.y * m2.y - d1 * d1 + d2 * d2);
    let b2 = 0.5 * (m2.x * m2.x - m3.x * m3.x + m2.y * m2.y - m3.y * m3.y - d2 * d2 + d3 * d3);
    Ok(Point2::new((b1 * r2.y - b2 * r1.y) / det, (r1.x * b2 - r2.x * b1) / det))
}

const TRIPLES: [[usize; 3]; 3] = [[0, 1, 2], [1, 2, 3], [2, 3, 0]];

/// Candidate common image sources, sorted by residual then position.
pub fn find_common_is(obs: &MicArrayObservation, cfg: &IsLocateConfig) -> Vec<CandidateIs> {
    let c = cfg.speed_of_sound;
    let mics = obs.mic_positions;

    // drop the direct path and keep the earliest echoes
    let lists: Vec<Vec<f64>> = (0..4)
        .map(|k| {
            let direct = mics[k].distance(obs.source_position) / c;
            let mut toas: Vec<f64> = obs.echo_lists[k]
                .iter()
                .map(|e| e.toa)
                .filter(|t| math::abs(t - direct) > cfg.direct_path_tolerance)
                .collect();
            toas.sort_by(f64::total_cmp);
            toas.truncate(cfg.max_echoes_per_mic);
            toas
        })
        .collect();
    if lists.iter().any(|l| l.is_empty()) {
        return Vec::new();
    }

    // each triple's solutions indexed by its three echo indices
    let mut tables: Vec<Vec<Option<Point2>>> = Vec::with_capacity(3);
    for tri in TRIPLES {
        let [a, b, d] = tri;
        let (la, lb, ld) = (&lists[a], &lists[b], &lists[d]);
        let mut table = Vec::with_capacity(la.len() * lb.len() * ld.len());
        for &ta in la {
            for &tb in lb {
                for &td in ld {
                    table.push(solve_is_triple(mics[a], mics[b], mics[d], ta, tb, td, c).ok());
                }
            }
        }
        tables.push(table);
    }
    let n: [usize; 4] = [lists[0].len(), lists[1].len(), lists[2].len(), lists[3].len()];
    let idx = |tri: usize, i: usize, j: usize, k: usize| -> usize {
        let [_, b, d] = TRIPLES[tri];
        (i * n[b] + j) * n[d] + k
    };

    let mut out = Vec::new();
    for e0 in 0..n[0] {
        for e1 in 0..n[1] {
            for e2 in 0..n[2] {
                let Some(p123) = tables[0][idx(0, e0, e1, e2)] else { continue };
                for e3 in 0..n[3] {
                    let Some(p234) = tables[1][idx(1, e1, e2, e3)] else { continue };
                    let Some(p341) = tables[2][idx(2, e2, e3, e0)] else { continue };
                    let residual = p123.distance(p234).max(p234.distance(p341)).max(p341.distance(p123));
                    if !(residual < cfg.match_radius) {
                        continue;
                    }
                    let position = (p123 + p234 + p341) * (1.0 / 3.0);
                    if position.distance(obs.source_position) <= tol::DEGENERATE {
                        continue;
                    }
                    let cand = CandidateIs {
                        position,
                        supporting_toas: [lists[0][e0], lists[1][e1], lists[2][e2], lists[3][e3]],
                        residual,
                    };
                    let plausible = mics
                        .iter()
                        .all(|&m| reflective_point_filter(&cand, obs.source_position, m).unwrap_or(false));
                    if plausible {
                        out.push(cand);
                    }
                }
            }
        }
    }
    sort_canonical(&mut out);
    // one observation sees each image once: keep the best-fitting candidate
    // of any group closer than the match radius
    let mut kept: Vec<CandidateIs> = Vec::with_capacity(out.len());
    for cand in out {
        if kept.iter().all(|k| k.position.distance(cand.position) >= cfg.match_radius) {
            kept.push(cand);
        }
    }
    kept
}

/// Canonical order: residual, then x, then y.
pub fn sort_canonical(cands: &mut [CandidateIs]) {
    cands.sort_by(|a, b| {
        a.residual
            .total_cmp(&b.residual)
            .then(a.position.x.total_cmp(&b.position.x))
            .then(a.position.y.total_cmp(&b.position.y))
    });
}

/// Reflective point of a candidate for one microphone: where the segment
/// from the candidate to the microphone meets the would-be wall, if it
/// does.
pub fn reflective_point(candidate: Point2, source: Point2, mic: Point2) -> Result<Option<Point2>> {
    let wall = wall_line_from_source_and_is(source, candidate)?;
    Ok(segment_line_crossing(candidate, mic, &wall))
}

fn segment_line_crossing(a: Point2, b: Point2, l: &Line2) -> Option<Point2> {
    let sa = point_side(a, l);
    let sb = point_side(b, l);
    if sa == sb || (sa > 0.0 && sb > 0.0) || (sa < 0.0 && sb < 0.0) {
        return None;
    }
    let t = sa / (sa - sb);
    Some(a + (b - a) * t)
}

/// Keeps a candidate only when the segment candidate → mic crosses the
/// would-be wall and the crossing sits on the source side of it (within the
/// geometric epsilon).
pub fn reflective_point_filter(candidate: &CandidateIs, source: Point2, mic: Point2) -> Result<bool> {
    let wall = wall_line_from_source_and_is(source, candidate.position)?;
    let Some(rp) = segment_line_crossing(candidate.position, mic, &wall) else {
        return Ok(false);
    };
    let source_side = point_side(source, &wall);
    Ok(point_side(rp, &wall) * source_side.signum() >= -tol::GEOMETRIC)
}

/// Reflective-point check against already reconstructed walls: the
/// reflection of the candidate must happen on the source side of every
/// known wall, allowing `tolerance` meters of slack.
pub fn reflective_point_within_walls(candidate: Point2, source: Point2, mic: Point2, walls: &[Line2], tolerance: f64) -> bool {
    let Ok(Some(rp)) = reflective_point(candidate, source, mic) else {
        return false;
    };
    walls.iter().all(|w| {
        let s = point_side(source, w);
        point_side(rp, w) * s.signum() >= -tolerance
    })
}
