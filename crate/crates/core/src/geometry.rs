//! Geometric kernels: anchor points, buffered gate tests, arc-length
//! resampling and the discrete Fréchet / Hausdorff distance pair.

use crate::error::{Error, Result};
use crate::model::{AnalysisConfig, BoundingBox, Point, Rect, Sample, Trajectory};
use crate::scalar::Scalar;

/// Bottom-centre of the box, used as a foot-position proxy.
pub fn anchor_point<T: Scalar>(b: &BoundingBox<T>) -> Point<T> {
    Point::new(b.x + b.w / T::lit(2.0), b.y + b.h)
}

/// Geometric centre of the box.
pub fn centroid<T: Scalar>(b: &BoundingBox<T>) -> Point<T> {
    let two = T::lit(2.0);
    Point::new(b.x + b.w / two, b.y + b.h / two)
}

/// Whether the disk around the box centroid, with radius `tolerance` times
/// the box diagonal, touches the closed rectangle.
pub fn gate_contains<T: Scalar>(b: &BoundingBox<T>, rect: &Rect<T>, tolerance: T) -> bool {
    if rect.is_degenerate() || tolerance.is_nan() || tolerance < T::zero() {
        return false;
    }
    let c = centroid(b);
    let radius = tolerance * b.diagonal();
    let nearest = Point::new(
        c.x.max(rect.x).min(rect.x + rect.w),
        c.y.max(rect.y).min(rect.y + rect.h),
    );
    let dx = c.x - nearest.x;
    let dy = c.y - nearest.y;
    dx * dx + dy * dy <= radius * radius
}

/// Resamples to `n` points evenly spaced by arc length along the polyline.
///
/// Endpoints are kept exactly and timestamps are interpolated (rounded to
/// the millisecond) alongside positions. A path with zero length becomes
/// `n` copies of its first point, timestamps spread evenly over its span.
pub fn resample<T: Scalar>(traj: &Trajectory<T>, n: usize) -> Result<Trajectory<T>> {
    if n < 2 {
        return Err(Error::invalid(format!("resample needs n >= 2, got {n}")));
    }
    let s = traj.samples();
    let first = s[0];
    let last = s[s.len() - 1];

    let mut cumulative = Vec::with_capacity(s.len());
    let mut total = T::zero();
    cumulative.push(total);
    for w in s.windows(2) {
        total = total + w[0].point.distance(&w[1].point);
        cumulative.push(total);
    }

    let mut out = Vec::with_capacity(n);
    let denom = T::from_usize(n - 1).unwrap();
    if total <= T::zero() {
        let span = (last.ts - first.ts) as f64;
        for k in 0..n {
            let ts = first.ts + (span * k as f64 / (n - 1) as f64).round() as i64;
            out.push(Sample { ts, point: first.point });
        }
        return Ok(Trajectory::from_parts(traj.track_id, out));
    }

    let mut seg = 0;
    out.push(first);
    for k in 1..n - 1 {
        let target = total * T::from_usize(k).unwrap() / denom;
        while seg + 1 < s.len() - 1 && cumulative[seg + 1] < target {
            seg += 1;
        }
        let (a, b) = (s[seg], s[seg + 1]);
        let len = cumulative[seg + 1] - cumulative[seg];
        let frac = if len > T::zero() {
            ((target - cumulative[seg]) / len).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        let point = Point::new(
            a.point.x + (b.point.x - a.point.x) * frac,
            a.point.y + (b.point.y - a.point.y) * frac,
        );
        let ts = a.ts + ((b.ts - a.ts) as f64 * frac.as_f64()).round() as i64;
        out.push(Sample { ts, point });
    }
    out.push(last);
    Ok(Trajectory::from_parts(traj.track_id, out))
}

fn require_nonempty<T>(p: &[Point<T>], q: &[Point<T>]) -> Result<()> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::invalid("distance between empty point lists"));
    }
    Ok(())
}

/// Discrete Fréchet distance under the Euclidean norm.
///
/// Dynamic program over the coupling table, `c(i, j) = max(d(p_i, q_j),
/// min(c(i-1, j), c(i-1, j-1), c(i, j-1)))` with the first row and column
/// accumulated by running maxima. Uses two rows of memory.
pub fn discrete_frechet<T: Scalar>(p: &[Point<T>], q: &[Point<T>]) -> Result<T> {
    require_nonempty(p, q)?;
    let m = q.len();
    let mut prev = vec![T::zero(); m];
    let mut curr = vec![T::zero(); m];

    prev[0] = p[0].distance(&q[0]);
    for j in 1..m {
        prev[j] = p[0].distance(&q[j]).max(prev[j - 1]);
    }
    for pi in &p[1..] {
        curr[0] = pi.distance(&q[0]).max(prev[0]);
        for j in 1..m {
            let reach = prev[j].min(prev[j - 1]).min(curr[j - 1]);
            curr[j] = pi.distance(&q[j]).max(reach);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

fn directed_hausdorff<T: Scalar>(from: &[Point<T>], to: &[Point<T>]) -> T {
    from.iter()
        .map(|a| {
            to.iter()
                .map(|b| a.distance(b))
                .fold(T::infinity(), |acc, d| acc.min(d))
        })
        .fold(T::zero(), |acc, d| acc.max(d))
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff<T: Scalar>(p: &[Point<T>], q: &[Point<T>]) -> Result<T> {
    require_nonempty(p, q)?;
    Ok(directed_hausdorff(p, q).max(directed_hausdorff(q, p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceMethod {
    Frechet,
    Hausdorff,
}

/// A trajectory distance tagged with the metric that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceResult<T> {
    pub value: T,
    pub method: DistanceMethod,
}

/// Fréchet when the table fits the cell budget, Hausdorff otherwise.
pub fn point_list_distance<T: Scalar>(p: &[Point<T>], q: &[Point<T>], cell_budget: usize) -> Result<DistanceResult<T>> {
    if p.len().saturating_mul(q.len()) <= cell_budget {
        Ok(DistanceResult {
            value: discrete_frechet(p, q)?,
            method: DistanceMethod::Frechet,
        })
    } else {
        Ok(DistanceResult {
            value: hausdorff(p, q)?,
            method: DistanceMethod::Hausdorff,
        })
    }
}

pub fn trajectory_distance<T: Scalar>(
    p: &Trajectory<T>,
    q: &Trajectory<T>,
    cfg: &AnalysisConfig,
) -> Result<DistanceResult<T>> {
    point_list_distance(&p.points(), &q.points(), cfg.frechet_cell_budget)
}
