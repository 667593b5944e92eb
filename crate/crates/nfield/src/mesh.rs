//! 1D spatial tessellation and the time partition used for slab marching.
//!
//! The time partition optionally inserts breaking points (multiples of a
//! constant delay) into the set of time levels; each breaking interval is
//! then filled with uniform sub-steps no longer than the requested step.

use crate::error::{Error, Result};

/// Relative/absolute mixed tolerance for classifying a time against a level.
pub(crate) fn level_tolerance(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

/// The 1D spatial interval Ω = (a, b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
}

impl Domain {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid(format!(
                "domain endpoints must satisfy a < b, got [{a}, {b}]"
            )));
        }
        Ok(Domain { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

/// Tessellation of the domain into non-overlapping line elements.
#[derive(Debug, Clone)]
pub struct SpaceMesh {
    /// Element boundary coordinates, strictly increasing; first = a, last = b.
    pub nodes: Vec<f64>,
    /// (left node index, right node index) per element.
    pub elements: Vec<(usize, usize)>,
    /// Maximal element diameter.
    pub h: f64,
}

impl SpaceMesh {
    /// Build a uniform mesh of `m` equal-length elements.
    pub fn uniform(domain: Domain, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("mesh must have at least one element"));
        }
        let h = domain.length() / m as f64;
        let mut nodes: Vec<f64> = (0..=m).map(|i| domain.a + i as f64 * h).collect();
        // Make the right endpoint exact regardless of rounding in a + m*h.
        nodes[m] = domain.b;
        let elements = (0..m).map(|i| (i, i + 1)).collect();
        let h = nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        Ok(SpaceMesh { nodes, elements, h })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        let (l, r) = self.elements[e];
        (self.nodes[l], self.nodes[r])
    }

    pub fn element_length(&self, e: usize) -> f64 {
        let (l, r) = self.element_bounds(e);
        r - l
    }

    pub fn domain(&self) -> Domain {
        Domain {
            a: self.nodes[0],
            b: *self.nodes.last().unwrap(),
        }
    }

    /// Index of the element whose closure contains `x` (ties go left-of-boundary
    /// to the element ending at `x`, except at the left domain end).
    pub fn locate(&self, x: f64) -> Result<usize> {
        let dom = self.domain();
        let tol = level_tolerance(x);
        if x < dom.a - tol || x > dom.b + tol {
            return Err(Error::out_of_range(format!(
                "x = {x} outside domain [{}, {}]",
                dom.a, dom.b
            )));
        }
        // Binary search over element boundaries.
        let mut lo = 0usize;
        let mut hi = self.n_elements() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if x <= self.nodes[mid + 1] + tol {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }
}

/// Where a time falls relative to the partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeLocation {
    /// t ≤ 0: inside the initial history segment.
    Initial,
    /// t ∈ I_n = (t_{n−1}, t_n]; slab indices are 1-based.
    Interval(usize),
}

/// Partition 0 = t_0 < t_1 < ... < t_N = T of the simulation interval.
#[derive(Debug, Clone)]
pub struct TimePartition {
    pub levels: Vec<f64>,
    pub steps: Vec<f64>,
}

impl TimePartition {
    /// Uniform partition with step k; the last step is shortened when k does
    /// not divide T.
    pub fn uniform(t_final: f64, k: f64) -> Result<Self> {
        check_step(t_final, k)?;
        let n_full = (t_final / k).floor() as usize;
        let rem = t_final - n_full as f64 * k;
        let mut levels: Vec<f64> = (0..=n_full).map(|i| i as f64 * k).collect();
        if rem <= 1e-9 * k {
            *levels.last_mut().unwrap() = t_final;
        } else {
            levels.push(t_final);
        }
        Ok(Self::from_levels(levels))
    }

    /// Partition whose levels contain every multiple of `breaking_period` up to
    /// T; each breaking interval is filled with ceil(len/k) uniform sub-steps.
    pub fn with_breaking_points(t_final: f64, k: f64, breaking_period: f64) -> Result<Self> {
        if !(breaking_period > 0.0) {
            return Err(Error::invalid(format!(
                "breaking period must be positive, got {breaking_period}"
            )));
        }
        check_step(t_final, k)?;
        let mut levels = vec![0.0];
        let mut m = 1usize;
        let mut left = 0.0;
        loop {
            let xi = m as f64 * breaking_period;
            let right = if xi < t_final - level_tolerance(t_final) {
                xi
            } else {
                t_final
            };
            levels.extend(fill_redistributed(left, right, k));
            if right == t_final {
                break;
            }
            left = right;
            m += 1;
        }
        Ok(Self::from_levels(levels))
    }

    fn from_levels(levels: Vec<f64>) -> Self {
        let steps = levels.windows(2).map(|w| w[1] - w[0]).collect();
        TimePartition { levels, steps }
    }

    /// Number of slabs N.
    pub fn n_slabs(&self) -> usize {
        self.steps.len()
    }

    pub fn t_final(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    /// Slab interval I_n = (t_{n−1}, t_n] for 1-based n.
    pub fn slab_bounds(&self, n: usize) -> (f64, f64) {
        (self.levels[n - 1], self.levels[n])
    }

    pub fn step(&self, n: usize) -> f64 {
        self.steps[n - 1]
    }

    /// Locate t within the partition using the half-open-left convention:
    /// a time exactly at level t_m (m ≥ 1) belongs to the slab ending there.
    pub fn locate(&self, t: f64) -> Result<TimeLocation> {
        let tol = level_tolerance(t);
        if t <= tol {
            return Ok(TimeLocation::Initial);
        }
        let t_end = self.t_final();
        if t > t_end + tol {
            return Err(Error::out_of_range(format!(
                "t = {t} beyond final time {t_end}"
            )));
        }
        // Smallest m ≥ 1 with t ≤ t_m + tol.
        let mut lo = 1usize;
        let mut hi = self.n_slabs();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if t <= self.levels[mid] + tol {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(TimeLocation::Interval(lo))
    }

    /// Snap `t` to the exact stored level value if it lies within tolerance of
    /// one; otherwise return it unchanged.
    pub fn snap_to_level(&self, t: f64) -> f64 {
        let tol = level_tolerance(t);
        match self.levels.binary_search_by(|l| l.partial_cmp(&t).unwrap()) {
            Ok(i) => self.levels[i],
            Err(i) => {
                if i < self.levels.len() && (self.levels[i] - t).abs() <= tol {
                    self.levels[i]
                } else if i > 0 && (self.levels[i - 1] - t).abs() <= tol {
                    self.levels[i - 1]
                } else {
                    t
                }
            }
        }
    }
}

const MAX_SLABS: f64 = 1e7;

fn check_step(t_final: f64, k: f64) -> Result<()> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(Error::invalid(format!(
            "final time must be positive and finite, got {t_final}"
        )));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!(
            "time step must be positive and finite, got {k}"
        )));
    }
    if t_final / k > MAX_SLABS {
        return Err(Error::invalid(format!(
            "partition of {t_final} with step {k} exceeds {MAX_SLABS} slabs"
        )));
    }
    Ok(())
}

/// Levels strictly after `left` up to and including `right`: ceil(len/k)
/// uniform sub-steps, so every step stays ≤ k while `right` is hit exactly.
fn fill_redistributed(left: f64, right: f64, k: f64) -> Vec<f64> {
    let len = right - left;
    let ratio = len / k;
    let n = (ratio - 1e-9).ceil().max(1.0) as usize;
    let sub = len / n as f64;
    let mut out: Vec<f64> = (1..n).map(|i| left + i as f64 * sub).collect();
    out.push(right);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mesh_two_elements() {
        let mesh = SpaceMesh::uniform(Domain::new(-1.0, 1.0).unwrap(), 2).unwrap();
        assert_eq!(mesh.nodes, vec![-1.0, 0.0, 1.0]);
        assert_eq!(mesh.h, 1.0);
    }

    #[test]
    fn uniform_mesh_four_elements() {
        let mesh = SpaceMesh::uniform(Domain::new(-1.0, 1.0).unwrap(), 4).unwrap();
        assert_eq!(mesh.nodes, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(mesh.h, 0.5);
    }

    #[test]
    fn zero_elements_rejected() {
        assert!(SpaceMesh::uniform(Domain::new(-1.0, 1.0).unwrap(), 0).is_err());
    }

    #[test]
    fn degenerate_domain_rejected() {
        assert!(Domain::new(1.0, 1.0).is_err());
        assert!(Domain::new(2.0, -1.0).is_err());
    }

    #[test]
    fn locate_element_boundaries() {
        let mesh = SpaceMesh::uniform(Domain::new(-1.0, 1.0).unwrap(), 4).unwrap();
        assert_eq!(mesh.locate(-1.0).unwrap(), 0);
        assert_eq!(mesh.locate(-0.25).unwrap(), 1);
        assert_eq!(mesh.locate(0.0).unwrap(), 1); // boundary goes left
        assert_eq!(mesh.locate(1.0).unwrap(), 3);
        assert!(mesh.locate(1.5).is_err());
    }

    #[test]
    fn uniform_partition() {
        let p = TimePartition::uniform(10.0, 0.5).unwrap();
        assert_eq!(p.n_slabs(), 20);
        assert!((p.levels[1] - 0.5).abs() < 1e-15);
        assert_eq!(p.t_final(), 10.0);
    }

    #[test]
    fn uniform_partition_shortened_last_step() {
        let p = TimePartition::uniform(10.0, 0.3).unwrap();
        assert_eq!(p.n_slabs(), 34);
        assert!((p.steps[33] - 0.1).abs() < 1e-12);
        assert!(p.steps.iter().all(|&s| s <= 0.3 + 1e-12));
    }

    #[test]
    fn breaking_points_aligned_is_uniform() {
        let p = TimePartition::with_breaking_points(4.0, 0.5, 2.0).unwrap();
        let q = TimePartition::uniform(4.0, 0.5).unwrap();
        assert_eq!(p.n_slabs(), q.n_slabs());
        for (a, b) in p.levels.iter().zip(&q.levels) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(p.levels.iter().any(|&l| (l - 2.0).abs() < 1e-12));
    }

    #[test]
    fn breaking_points_nonaligned_subdivides() {
        // ceil(2/0.3) = 7 sub-steps of 2/7 per breaking interval
        let p = TimePartition::with_breaking_points(4.0, 0.3, 2.0).unwrap();
        assert_eq!(p.n_slabs(), 14);
        for m in 0..=2 {
            let target = 2.0 * m as f64;
            assert!(p.levels.iter().any(|&l| (l - target).abs() < 1e-12));
        }
        for &s in &p.steps {
            assert!((s - 2.0 / 7.0).abs() < 1e-12);
            assert!(s <= 0.3);
        }
    }

    #[test]
    fn breaking_period_beyond_final_time() {
        let p = TimePartition::with_breaking_points(1.0, 0.25, 5.0).unwrap();
        assert_eq!(p.n_slabs(), 4);
        assert_eq!(p.t_final(), 1.0);
    }

    #[test]
    fn invalid_partition_arguments() {
        assert!(TimePartition::uniform(-1.0, 0.5).is_err());
        assert!(TimePartition::uniform(1.0, 0.0).is_err());
        assert!(TimePartition::with_breaking_points(1.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn locate_time_conventions() {
        let p = TimePartition::uniform(1.0, 0.5).unwrap();
        assert_eq!(p.locate(0.5).unwrap(), TimeLocation::Interval(1));
        assert_eq!(p.locate(0.75).unwrap(), TimeLocation::Interval(2));
        assert_eq!(p.locate(-1.5).unwrap(), TimeLocation::Initial);
        assert_eq!(p.locate(0.0).unwrap(), TimeLocation::Initial);
        assert_eq!(p.locate(1.0).unwrap(), TimeLocation::Interval(2));
        assert!(p.locate(1.1).is_err());
    }

    #[test]
    fn locate_level_and_just_after() {
        let k = 0.5;
        let p = TimePartition::uniform(10.0, k).unwrap();
        let eps = 1e-9 * k;
        for m in 1..p.n_slabs() {
            let tm = p.levels[m];
            assert_eq!(p.locate(tm).unwrap(), TimeLocation::Interval(m));
            assert_eq!(p.locate(tm + eps).unwrap(), TimeLocation::Interval(m + 1));
        }
    }

    #[test]
    fn steps_sum_to_final_time() {
        for (t_final, k, bp) in [(10.0, 0.3, None), (4.0, 0.3, Some(2.0)), (7.3, 0.11, Some(1.7))] {
            let p = match bp {
                Some(b) => TimePartition::with_breaking_points(t_final, k, b).unwrap(),
                None => TimePartition::uniform(t_final, k).unwrap(),
            };
            let sum: f64 = p.steps.iter().sum();
            assert!((sum - t_final).abs() < 1e-12, "sum {sum} vs {t_final}");
            assert!(p.steps.iter().all(|&s| s > 0.0));
            // every multiple of the breaking period is within 1e-12 of a level
            if let Some(b) = bp {
                let mut m = 1;
                while m as f64 * b <= t_final + 1e-12 {
                    let target = m as f64 * b;
                    assert!(
                        p.levels.iter().any(|&l| (l - target).abs() < 1e-12),
                        "missing breaking point {target}"
                    );
                    m += 1;
                }
            }
        }
    }

    #[test]
    fn snap_to_level_picks_exact_values() {
        let p = TimePartition::uniform(1.2, 0.2).unwrap();
        let stored = p.levels[3];
        assert_eq!(p.snap_to_level(0.6000000000000001), stored);
        assert_eq!(p.snap_to_level(0.55), 0.55);
    }
}
