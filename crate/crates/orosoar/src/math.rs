//! Small fixed-size vector/matrix types used throughout the simulator.
//!
//! Everything is NED (north-east-down): x north, y east, z down. Altitude
//! above ground is therefore `-z`.

use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::Real;

/// 3-vector in NED coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zeros() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(self, rhs: Self) -> T {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Self) -> Self {
        Self::new(
            self.y * rhs.z - self.z * rhs.y,
            self.z * rhs.x - self.x * rhs.z,
            self.x * rhs.y - self.y * rhs.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector, or `None` when shorter than `eps`.
    pub fn normalized(self, eps: T) -> Option<Self> {
        let n = self.norm();
        if n > eps {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Component along NED axis index 0..3 (x, y, z).
    pub fn axis(self, i: usize) -> T {
        match i {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis index out of range"),
        }
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Row-major 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

impl<T: Real> Mat2<T> {
    pub fn zeros() -> Self {
        Self([[T::zero(); 2]; 2])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        m.0[0][0] = T::one();
        m.0[1][1] = T::one();
        m
    }

    pub fn mul_vec(&self, v: [T; 2]) -> [T; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn transpose(&self) -> Self {
        Self([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    /// Solves `self * x = b` by direct inversion; `None` when singular.
    pub fn solve(&self, b: [T; 2]) -> Option<[T; 2]> {
        let det = self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0];
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        Some([
            (self.0[1][1] * b[0] - self.0[0][1] * b[1]) / det,
            (self.0[0][0] * b[1] - self.0[1][0] * b[0]) / det,
        ])
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Real> Mat3<T> {
    pub fn from_rows(rows: [[T; 3]; 3]) -> Self {
        Self(rows)
    }

    pub fn zeros() -> Self {
        Self([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..3 {
            m.0[i][i] = T::one();
        }
        m
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.0[row][col]
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(
            self.0[0][0] * v.x + self.0[0][1] * v.y + self.0[0][2] * v.z,
            self.0[1][0] * v.x + self.0[1][1] * v.y + self.0[1][2] * v.z,
            self.0[2][0] * v.x + self.0[2][1] * v.y + self.0[2][2] * v.z,
        )
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    /// Solves `self * x = b` by Gaussian elimination with partial pivoting;
    /// `None` when singular to working precision.
    pub fn solve(&self, b: Vec3<T>) -> Option<Vec3<T>> {
        let mut a = self.0;
        let mut rhs = [b.x, b.y, b.z];
        for col in 0..3 {
            let mut pivot = col;
            for row in (col + 1)..3 {
                if a[row][col].abs() > a[pivot][col].abs() {
                    pivot = row;
                }
            }
            if a[pivot][col].abs() <= T::epsilon() * T::of(16.0) {
                return None;
            }
            a.swap(col, pivot);
            rhs.swap(col, pivot);
            for row in (col + 1)..3 {
                let f = a[row][col] / a[col][col];
                for k in col..3 {
                    let sub = f * a[col][k];
                    a[row][k] -= sub;
                }
                rhs[row] -= f * rhs[col];
            }
        }
        let mut x = [T::zero(); 3];
        for row in (0..3).rev() {
            let mut acc = rhs[row];
            for k in (row + 1)..3 {
                acc -= a[row][k] * x[k];
            }
            x[row] = acc / a[row][row];
        }
        Some(Vec3::new(x[0], x[1], x[2]))
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
        out
    }
}

/// Euler attitude: roll about body x, pitch about body y, yaw about NED z.
///
/// The body-to-NED rotation applies yaw, then roll, then pitch
/// (`Rz(yaw)·Rx(roll)·Ry(pitch)`), so that thrust along body-x maps to
/// `((cθcψ − sφsθsψ)T, (cθsψ + sφsθcψ)T, −cφsθT)` in NED.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles<T> {
    pub roll: T,
    pub pitch: T,
    pub yaw: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(roll: T, pitch: T, yaw: T) -> Self {
        Self { roll, pitch, yaw }
    }

    pub fn level() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn body_to_ned(&self) -> Mat3<T> {
        let (sph, cph) = self.roll.sin_cos();
        let (sth, cth) = self.pitch.sin_cos();
        let (sps, cps) = self.yaw.sin_cos();
        Mat3::from_rows([
            [
                cps * cth - sps * sph * sth,
                -sps * cph,
                cps * sth + sps * sph * cth,
            ],
            [
                sps * cth + cps * sph * sth,
                cps * cph,
                sps * sth - cps * sph * cth,
            ],
            [-cph * sth, sph, cph * cth],
        ])
    }

    pub fn ned_to_body(&self) -> Mat3<T> {
        self.body_to_ned().transpose()
    }

    pub fn is_finite(&self) -> bool {
        self.roll.is_finite() && self.pitch.is_finite() && self.yaw.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cross_follows_right_hand_rule() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(x.cross(y), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn mat3_solve_recovers_solution() {
        let a = Mat3::from_rows([[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 5.0]]);
        let x = Vec3::new(0.3, -1.2, 2.5);
        let b = a.mul_vec(x);
        let got = a.solve(b).unwrap();
        assert_relative_eq!(got.x, x.x, max_relative = 1e-12);
        assert_relative_eq!(got.y, x.y, max_relative = 1e-12);
        assert_relative_eq!(got.z, x.z, max_relative = 1e-12);
    }

    #[test]
    fn mat3_solve_rejects_singular() {
        let a = Mat3::from_rows([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]);
        assert!(a.solve(Vec3::new(1.0, 2.0, 3.0)).is_none());
    }

    #[test]
    fn mat2_solve_round_trip() {
        let a = Mat2([[2.0, 0.3], [0.3, 1.5]]);
        let x = [0.7, -0.4];
        let b = a.mul_vec(x);
        let got = a.solve(b).unwrap();
        assert_relative_eq!(got[0], x[0], max_relative = 1e-12);
        assert_relative_eq!(got[1], x[1], max_relative = 1e-12);
    }

    #[test]
    fn body_to_ned_is_orthonormal() {
        let att = EulerAngles::new(0.3_f64, -0.2, 1.1);
        let r = att.body_to_ned();
        let rt = r.transpose();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += r.get(i, k) * rt.get(k, j);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(acc, expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn thrust_axis_matches_closed_form() {
        // Column 1 of the DCM must equal the closed-form thrust direction.
        let (phi, theta, psi) = (0.25_f64, -0.4, 2.0);
        let att = EulerAngles::new(phi, theta, psi);
        let bx = att.body_to_ned().mul_vec(Vec3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(
            bx.x,
            theta.cos() * psi.cos() - phi.sin() * theta.sin() * psi.sin(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            bx.y,
            theta.cos() * psi.sin() + phi.sin() * theta.sin() * psi.cos(),
            epsilon = 1e-15
        );
        assert_relative_eq!(bx.z, -phi.cos() * theta.sin(), epsilon = 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let att = EulerAngles::new(0.1_f32, 0.2, 0.3);
        let v = att.body_to_ned().mul_vec(Vec3::new(1.0_f32, 0.0, 0.0));
        assert!((v.norm() - 1.0).abs() < 1e-6);
    }
}
