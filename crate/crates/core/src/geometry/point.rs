use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use crate::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> Point2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }
}

impl<T> Point3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Point3 { x, y, z }
    }
}

impl<T: Real> Point2<T> {
    /// z-component of the cross product of the two vectors.
    #[inline]
    pub fn perp_dot(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn to_3d(self) -> Point3<T> {
        Point3::new(self.x, self.y, T::zero())
    }
}

impl<T: Real> Point3<T> {
    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn normalized(self) -> Self {
        self * (T::one() / self.norm())
    }
}

/// Fixed-dimension point/vector operations shared by the 2D and 3D code paths.
pub trait Coords<T: Real>:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<T, Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const DIM: usize;

    fn coord(&self, axis: usize) -> T;

    fn from_fn(f: impl FnMut(usize) -> T) -> Self;

    fn dot(&self, o: &Self) -> T;

    #[inline]
    fn norm2(&self) -> T {
        self.dot(self)
    }

    #[inline]
    fn norm(&self) -> T {
        self.norm2().sqrt()
    }

    #[inline]
    fn dist2(&self, o: &Self) -> T {
        (*self - *o).norm2()
    }

    #[inline]
    fn dist(&self, o: &Self) -> T {
        self.dist2(o).sqrt()
    }

    fn is_finite(&self) -> bool {
        (0..Self::DIM).all(|i| self.coord(i).is_finite())
    }

    /// Coordinates widened to `f64` and padded with zeros to three entries.
    fn to_f64_3(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(Self::DIM) {
            *o = self.coord(i).as_f64();
        }
        out
    }
}

impl<T: Real> Coords<T> for Point2<T> {
    const DIM: usize = 2;

    #[inline]
    fn coord(&self, axis: usize) -> T {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => panic!("axis {axis} out of range for Point2"),
        }
    }

    #[inline]
    fn from_fn(mut f: impl FnMut(usize) -> T) -> Self {
        Point2::new(f(0), f(1))
    }

    #[inline]
    fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y
    }
}

impl<T: Real> Coords<T> for Point3<T> {
    const DIM: usize = 3;

    #[inline]
    fn coord(&self, axis: usize) -> T {
        match axis {
            0 => self.x,
            1 => self.y,
            2 => self.z,
            _ => panic!("axis {axis} out of range for Point3"),
        }
    }

    #[inline]
    fn from_fn(mut f: impl FnMut(usize) -> T) -> Self {
        Point3::new(f(0), f(1), f(2))
    }

    #[inline]
    fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
}

macro_rules! impl_ops {
    ($ty:ident { $($f:ident),+ }) => {
        impl<T: Real> Add for $ty<T> {
            type Output = Self;
            #[inline]
            fn add(self, o: Self) -> Self {
                $ty { $($f: self.$f + o.$f),+ }
            }
        }

        impl<T: Real> Sub for $ty<T> {
            type Output = Self;
            #[inline]
            fn sub(self, o: Self) -> Self {
                $ty { $($f: self.$f - o.$f),+ }
            }
        }

        impl<T: Real> Mul<T> for $ty<T> {
            type Output = Self;
            #[inline]
            fn mul(self, s: T) -> Self {
                $ty { $($f: self.$f * s),+ }
            }
        }

        impl<T: Real> Neg for $ty<T> {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self {
                $ty { $($f: -self.$f),+ }
            }
        }
    };
}

impl_ops!(Point2 { x, y });
impl_ops!(Point3 { x, y, z });

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb<P> {
    pub min: P,
    pub max: P,
}

impl<P: Copy> Aabb<P> {
    pub fn from_points<'a, T: Real>(points: impl IntoIterator<Item = &'a P>) -> Option<Self>
    where
        P: Coords<T>,
    {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for p in it {
            lo = P::from_fn(|i| lo.coord(i).min(p.coord(i)));
            hi = P::from_fn(|i| hi.coord(i).max(p.coord(i)));
        }
        Some(Aabb { min: lo, max: hi })
    }

    /// Largest side length.
    pub fn size<T: Real>(&self) -> T
    where
        P: Coords<T>,
    {
        (0..P::DIM)
            .map(|i| self.max.coord(i) - self.min.coord(i))
            .fold(T::zero(), T::max)
    }

    pub fn diagonal<T: Real>(&self) -> T
    where
        P: Coords<T>,
    {
        self.min.dist(&self.max)
    }

    pub fn contains<T: Real>(&self, p: &P) -> bool
    where
        P: Coords<T>,
    {
        (0..P::DIM).all(|i| p.coord(i) >= self.min.coord(i) && p.coord(i) <= self.max.coord(i))
    }

    pub fn inflate<T: Real>(&self, by: T) -> Self
    where
        P: Coords<T>,
    {
        Aabb {
            min: P::from_fn(|i| self.min.coord(i) - by),
            max: P::from_fn(|i| self.max.coord(i) + by),
        }
    }
}
