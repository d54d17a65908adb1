//! Robot-mounted sensing unit: four microphones on rotatable, extendable
//! arms around the source, rotation sweeps and candidate clustering.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{Point2};
use crate::islocate::{find_common_is, sort_canonical, CandidateIs, IsLocateConfig, MicArrayObservation};
use crate::math;

/// Physical arm reach in meters.
pub const MAX_ARM_EXTENSION: f64 = 0.5;

/// Default extension schedule for corner mitigation, far to near.
pub const MITIGATION_EXTENSIONS: [f64; 4] = [0.5, 0.35, 0.2, 0.1];

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RigPose {
    /// Source position.
    pub center: Point2,
    /// Radians in `[0, π/2)`.
    pub arm_angle: f64,
    /// Meters in `(0, 0.5]`.
    pub arm_extension: f64,
}

impl RigPose {
    /// Validates the extension and folds the angle into `[0, π/2)`.
    pub fn new(center: Point2, arm_angle: f64, arm_extension: f64) -> Result<Self> {
        if !center.is_finite() || !arm_angle.is_finite() {
            return Err(Error::InvalidConfig("rig pose must be finite"));
        }
        if !(arm_extension > 0.0 && arm_extension <= MAX_ARM_EXTENSION) {
            return Err(Error::InvalidConfig("arm extension must lie in (0, 0.5] m"));
        }
        Ok(Self {
            center,
            arm_angle: math::wrap(arm_angle, FRAC_PI_2),
            arm_extension,
        })
    }

    pub fn with_angle(&self, arm_angle: f64) -> Self {
        Self {
            arm_angle: math::wrap(arm_angle, FRAC_PI_2),
            ..*self
        }
    }

    pub fn with_extension(&self, arm_extension: f64) -> Result<Self> {
        Self::new(self.center, self.arm_angle, arm_extension)
    }

    pub fn with_center(&self, center: Point2) -> Self {
        Self { center, ..*self }
    }
}

/// Microphone `k` sits at `angle + k·π/2` on the arm circle.
pub fn mic_positions(pose: &RigPose) -> [Point2; 4] {
    core::array::from_fn(|k| pose.center + Point2::from_angle(pose.arm_angle + k as f64 * FRAC_PI_2) * pose.arm_extension)
}

/// Anything that can produce a four-microphone observation for a rig pose:
/// the simulator in tests and experiments, hardware in principle.
pub trait SimOracle {
    fn observe(&mut self, pose: &RigPose) -> Result<MicArrayObservation>;

    /// Whether the robot may stop at `center`. Simulators use this as the
    /// guard that keeps the rig inside the room.
    fn admissible(&self, _center: Point2) -> bool {
        true
    }
}

impl<T: SimOracle + ?Sized> SimOracle for &mut T {
    fn observe(&mut self, pose: &RigPose) -> Result<MicArrayObservation> {
        (**self).observe(pose)
    }

    fn admissible(&self, center: Point2) -> bool {
        (**self).admissible(center)
    }
}

/// Number of orientations in a sweep with step `delta_deg`.
pub fn sweep_orientations(delta_deg: f64) -> Result<usize> {
    if !(delta_deg > 0.0 && delta_deg <= 360.0) {
        return Err(Error::InvalidConfig("sweep step must lie in (0, 360] degrees"));
    }
    let n = 360.0 / delta_deg;
    let k = math::round(n);
    if math::abs(n - k) > 1e-9 {
        return Err(Error::InvalidConfig("sweep step must divide 360 degrees"));
    }
    Ok(k as usize)
}

/// Runs [`find_common_is`] at every arm angle `k·delta` with the centre
/// and extension fixed and concatenates the results in sweep order.
pub fn rotation_sweep<O: SimOracle + ?Sized>(
    oracle: &mut O,
    pose: &RigPose,
    delta_deg: f64,
    cfg: &IsLocateConfig,
) -> Result<Vec<CandidateIs>> {
    let n = sweep_orientations(delta_deg)?;
    let step = delta_deg * PI / 180.0;
    let mut out = Vec::new();
    for k in 0..n {
        let obs = oracle.observe(&pose.with_angle(k as f64 * step))?;
        out.extend(find_common_is(&obs, cfg));
    }
    Ok(out)
}

/// One rotation sweep per extension, in schedule order.
pub fn extension_sweeps<O: SimOracle + ?Sized>(
    oracle: &mut O,
    pose: &RigPose,
    extensions: &[f64],
    delta_deg: f64,
    cfg: &IsLocateConfig,
) -> Result<Vec<(f64, Vec<CandidateIs>)>> {
    extensions
        .iter()
        .map(|&ext| {
            let p = pose.with_extension(ext)?;
            Ok((ext, rotation_sweep(oracle, &p, delta_deg, cfg)?))
        })
        .collect()
}

/// Rotation sweeps over several arm extensions, concatenated. Shortening
/// the arms separates first- and second-order echoes that nearly coincide
/// when a microphone sits close to a wall.
pub fn corner_mitigation_sweep<O: SimOracle + ?Sized>(
    oracle: &mut O,
    pose: &RigPose,
    extensions: &[f64],
    delta_deg: f64,
    cfg: &IsLocateConfig,
) -> Result<Vec<CandidateIs>> {
    Ok(extension_sweeps(oracle, pose, extensions, delta_deg, cfg)?
        .into_iter()
        .flat_map(|(_, c)| c)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IsCluster {
    pub members: Vec<CandidateIs>,
    pub centroid: Point2,
    pub size: usize,
}

fn centroid_of(points: &[Point2]) -> Point2 {
    let sum = points.iter().fold(Point2::ORIGIN, |a, p| a + *p);
    sum * (1.0 / points.len() as f64)
}

/// Greedy most-neighbours clustering.
///
/// Repeatedly seeds a cluster at the unassigned candidate with the most
/// unassigned neighbours within `radius`, absorbs those neighbours, then
/// drops the member farthest from the centroid until every member is
/// within `radius` of it. The result is a partition of the input and does
/// not depend on input order.
pub fn cluster_candidates(candidates: &[CandidateIs], radius: f64) -> Vec<IsCluster> {
    let mut cands = candidates.to_vec();
    sort_canonical(&mut cands);
    let n = cands.len();
    let r2 = radius * radius;
    let pts: Vec<Point2> = cands.iter().map(|c| c.position).collect();
    let within = |i: usize, j: usize| {
        let d = pts[i] - pts[j];
        d.dot(d) <= r2
    };
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && within(i, j)).collect())
        .collect();
    let mut count: Vec<usize> = neighbours.iter().map(Vec::len).collect();
    let mut assigned = alloc::vec![false; n];
    let mut out = Vec::new();

    let mut remaining = n;
    while remaining > 0 {
        let seed = (0..n)
            .filter(|&i| !assigned[i])
            .max_by(|&a, &b| count[a].cmp(&count[b]).then(b.cmp(&a)))
            .expect("remaining > 0");
        let mut members: Vec<usize> = core::iter::once(seed)
            .chain(neighbours[seed].iter().copied().filter(|&j| !assigned[j]))
            .collect();
        let mut centroid;
        loop {
            let p: Vec<Point2> = members.iter().map(|&i| pts[i]).collect();
            centroid = centroid_of(&p);
            let far = members
                .iter()
                .enumerate()
                .map(|(pos, &i)| (pos, (pts[i] - centroid).norm()))
                .filter(|(_, d)| *d > radius)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match far {
                Some((pos, _)) => {
                    members.remove(pos);
                }
                None => break,
            }
        }
        members.sort_unstable();
        for &i in &members {
            assigned[i] = true;
            remaining -= 1;
            for &j in &neighbours[i] {
                count[j] -= 1;
            }
        }
        out.push(IsCluster {
            size: members.len(),
            members: members.iter().map(|&i| cands[i]).collect(),
            centroid,
        });
    }
    out
}

impl IsCluster {
    /// Mean of the members within `trim` of the coordinate-wise median.
    /// Falls back to the centroid when no member is that close.
    pub fn trimmed_center(&self, trim: f64) -> Point2 {
        let median = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            if n % 2 == 1 {
                v[n / 2]
            } else {
                0.5 * (v[n / 2 - 1] + v[n / 2])
            }
        };
        if self.members.is_empty() {
            return self.centroid;
        }
        let m = Point2::new(
            median(self.members.iter().map(|c| c.position.x).collect()),
            median(self.members.iter().map(|c| c.position.y).collect()),
        );
        let near: Vec<Point2> = self
            .members
            .iter()
            .map(|c| c.position)
            .filter(|p| p.distance(m) <= trim)
            .collect();
        if near.is_empty() {
            self.centroid
        } else {
            centroid_of(&near)
        }
    }
}

/// `max(3, orientations / 4)`.
pub fn default_min_support(orientations: usize) -> usize {
    (orientations / 4).max(3)
}

/// Clusters with at least `min_support` members, biggest first and, among
/// equal sizes, nearest to the source first.
pub fn rank_clusters(clusters: &[IsCluster], source: Point2, min_support: usize) -> Vec<IsCluster> {
    let mut ranked: Vec<IsCluster> = clusters.iter().filter(|c| c.size >= min_support).cloned().collect();
    ranked.sort_by(|a, b| {
        b.size
            .cmp(&a.size)
            .then(a.centroid.distance(source).total_cmp(&b.centroid.distance(source)))
            .then(a.centroid.x.total_cmp(&b.centroid.x))
            .then(a.centroid.y.total_cmp(&b.centroid.y))
    });
    ranked
}

/// The biggest qualifying cluster, ties going to the one nearest the source.
pub fn pick_best_cluster(clusters: &[IsCluster], source: Point2, min_support: usize) -> Option<IsCluster> {
    rank_clusters(clusters, source, min_support).into_iter().next()
}
