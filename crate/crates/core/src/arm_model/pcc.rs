//! Constant-curvature segment transforms written against a generic scalar so the
//! same code serves plain evaluation and automatic differentiation.
//!
//! A segment of arc length `len` with bending coordinates `(bx, by)` has rotation
//! `exp([w]x)` with `w = (-by, bx, 0)` and end point
//! `len * (B bx, B by, A)`, where `A = sin(t)/t` and `B = (1 - cos(t))/t^2` with
//! `t^2 = bx^2 + by^2`. Both factors are analytic in `t^2`, which keeps the
//! straight configuration regular.

use num_dual::DualNum;

pub(crate) type Vec3<D> = [D; 3];
pub(crate) type Mat3<D> = [[D; 3]; 3];

/// Below this value of `t^2` the factors are evaluated from their series.
const SERIES_BELOW: f64 = 1e-4;

/// `(sin t / t, (1 - cos t) / t^2)` as functions of `x = t^2`.
pub(crate) fn arc_factors<D: DualNum<Primitive = f64> + Copy>(x: D) -> (D, D) {
    if x.re() < SERIES_BELOW {
        // truncation error below 1e-25 for x < 1e-4
        let a = D::from(1.0) - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0 + x * x * x * x / 362_880.0;
        let b = D::from(0.5) - x / 24.0 + x * x / 720.0 - x * x * x / 40_320.0 + x * x * x * x / 3_628_800.0;
        (a, b)
    } else {
        let t = x.sqrt();
        let half = (t * 0.5).sin();
        (t.sin() / t, half * half * 2.0 / x)
    }
}

/// Rotation and end point of a constant-curvature segment.
pub(crate) fn segment<D: DualNum<Primitive = f64> + Copy>(bx: D, by: D, len: f64) -> (Mat3<D>, Vec3<D>) {
    let x = bx * bx + by * by;
    let (a, b) = arc_factors(x);
    let one = D::from(1.0);
    // I + a [w]x + b [w]x^2 with w = (-by, bx, 0)
    let rot = [
        [one - b * bx * bx, -(b * bx * by), a * bx],
        [-(b * bx * by), one - b * by * by, a * by],
        [-(a * bx), -(a * by), one - b * x],
    ];
    let pos = [b * bx * len, b * by * len, a * len];
    (rot, pos)
}

pub(crate) fn mat_vec<D: DualNum<Primitive = f64> + Copy>(m: &Mat3<D>, v: &Vec3<D>) -> Vec3<D> {
    std::array::from_fn(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
}

pub(crate) fn mat_mul<D: DualNum<Primitive = f64> + Copy>(a: &Mat3<D>, b: &Mat3<D>) -> Mat3<D> {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][0] * b[0][c] + a[r][1] * b[1][c] + a[r][2] * b[2][c]))
}

pub(crate) fn identity<D: DualNum<Primitive = f64> + Copy>() -> Mat3<D> {
    let (o, z) = (D::from(1.0), D::from(0.0));
    [[o, z, z], [z, o, z], [z, z, o]]
}

/// Pose of a rigid frame as rotation plus translation.
#[derive(Clone, Copy)]
pub(crate) struct Frame<D> {
    pub rot: Mat3<D>,
    pub pos: Vec3<D>,
}

impl<D: DualNum<Primitive = f64> + Copy> Frame<D> {
    pub fn identity() -> Self {
        Frame {
            rot: identity(),
            pos: [D::from(0.0); 3],
        }
    }

    /// `self * (rot, pos)`.
    pub fn then(&self, rot: &Mat3<D>, pos: &Vec3<D>) -> Self {
        let moved = mat_vec(&self.rot, pos);
        Frame {
            rot: mat_mul(&self.rot, rot),
            pos: [self.pos[0] + moved[0], self.pos[1] + moved[1], self.pos[2] + moved[2]],
        }
    }
}

/// Frames at the end of each section for stacked bending coordinates `q`.
pub(crate) fn section_end_frames<D: DualNum<Primitive = f64> + Copy>(q: &[D; 6], lengths: &[f64; 3]) -> [Frame<D>; 3] {
    let mut frames = [Frame::identity(); 3];
    let mut current = Frame::identity();
    for i in 0..3 {
        let (rot, pos) = segment(q[2 * i], q[2 * i + 1], lengths[i]);
        current = current.then(&rot, &pos);
        frames[i] = current;
    }
    frames
}

/// Position of the centerline point at arc length `s`, measured from the base.
/// `s` is clamped to the arm.
pub(crate) fn centerline_point<D: DualNum<Primitive = f64> + Copy>(q: &[D; 6], lengths: &[f64; 3], s: f64) -> Vec3<D> {
    let mut base = Frame::identity();
    let mut start = 0.0;
    for i in 0..3 {
        let len = lengths[i];
        if s <= start + len || i == 2 {
            let local = (s - start).clamp(0.0, len);
            let frac = local / len;
            let (_, pos) = segment(q[2 * i] * frac, q[2 * i + 1] * frac, local);
            let moved = mat_vec(&base.rot, &pos);
            return [base.pos[0] + moved[0], base.pos[1] + moved[1], base.pos[2] + moved[2]];
        }
        let (rot, pos) = segment(q[2 * i], q[2 * i + 1], len);
        base = base.then(&rot, &pos);
        start += len;
    }
    unreachable!("loop returns on the last section")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_closed_form_at_switch() {
        let below = arc_factors(SERIES_BELOW * (1.0 - 1e-12));
        let above = arc_factors(SERIES_BELOW * (1.0 + 1e-12));
        assert!((below.0 - above.0).abs() < 1e-14);
        assert!((below.1 - above.1).abs() < 1e-14);
    }

    #[test]
    fn rotation_is_orthonormal() {
        let (r, _) = segment(0.9, -1.3, 0.2);
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-14);
            }
        }
    }
}
