//! Small fixed-size linear algebra on `[T; N]` arrays.

use crate::real::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

#[inline]
pub fn dot3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn sub3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm3<T: Real>(a: &Vec3<T>) -> T {
    dot3(a, a).sqrt()
}

pub fn normalize3<T: Real>(a: &Vec3<T>) -> Vec3<T> {
    let n = norm3(a);
    if n > T::zero() {
        [a[0] / n, a[1] / n, a[2] / n]
    } else {
        *a
    }
}

pub fn matmul3<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn transpose3<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn matvec3<T: Real>(a: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [dot3(&a[0], v), dot3(&a[1], v), dot3(&a[2], v)]
}

/// Rotation matrix of a unit quaternion `(w, x, y, z)`.
pub fn quat_to_mat3<T: Real>(q: &[T; 4]) -> Mat3<T> {
    let [w, x, y, z] = *q;
    let one = T::one();
    let two = T::two();
    [
        [
            one - two * (y * y + z * z),
            two * (x * y - w * z),
            two * (x * z + w * y),
        ],
        [
            two * (x * y + w * z),
            one - two * (x * x + z * z),
            two * (y * z - w * x),
        ],
        [
            two * (x * z - w * y),
            two * (y * z + w * x),
            one - two * (x * x + y * y),
        ],
    ]
}
