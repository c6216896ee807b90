//! Variable inhibition radius: the piecewise linear sizing field in 2D and its
//! extension into the volume around a sampled fracture network.

use crate::geometry::{dist_point_segment, Coords, Point2, Point3, Segment};
use crate::kdtree::KdTree;
use crate::{Error, Real, Result};

/// Parameters of the sizing field.
///
/// `h` is the minimum pair distance times two, `a` the slope (and Lipschitz
/// constant), `r` the growth range in units of `h`, `f` the width of the
/// constant band around features in units of `h`, and `rho_max` the 3D cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SizingParams<T> {
    pub h: T,
    pub a: T,
    pub r: T,
    pub f: T,
    pub rho_max: T,
}

impl<T: Real> SizingParams<T> {
    /// Builds validated parameters with `rho_max = (a*r + 1/2) * h`.
    pub fn new(h: T, a: T, r: T, f: T) -> Result<Self> {
        let half = T::lit(0.5);
        Self::with_rho_max(h, a, r, f, (a * r + half) * h)
    }

    pub fn with_rho_max(h: T, a: T, r: T, f: T, rho_max: T) -> Result<Self> {
        let p = SizingParams { h, a, r, f, rho_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.h.is_finite() && self.h > T::zero()) {
            return bad(format!("H must be positive and finite, got {}", self.h));
        }
        if !(self.a >= T::zero() && self.a < T::one()) {
            return bad(format!("A must lie in [0, 1), got {}", self.a));
        }
        if !(self.r.is_finite() && self.r >= T::zero()) {
            return bad(format!("R must be nonnegative, got {}", self.r));
        }
        if !(self.f.is_finite() && self.f >= T::zero()) {
            return bad(format!("F must be nonnegative, got {}", self.f));
        }
        if !(self.rho_max.is_finite() && self.rho_max >= self.min_radius()) {
            return bad(format!("rho_max must be at least H/2, got {}", self.rho_max));
        }
        Ok(())
    }

    /// Smallest radius the field produces, `h/2`.
    #[inline]
    pub fn min_radius(&self) -> T {
        self.h * T::lit(0.5)
    }

    /// Largest radius of the 2D field, `(a*r + 1/2) * h`.
    #[inline]
    pub fn max_radius2(&self) -> T {
        (self.a * self.r + T::lit(0.5)) * self.h
    }
}

/// 2D radius at distance `d` from the nearest feature.
#[inline]
pub fn rho2<T: Real>(d: T, p: &SizingParams<T>) -> T {
    let band = p.f * p.h;
    if d <= band {
        p.min_radius()
    } else if d <= (p.r + p.f) * p.h {
        p.a * (d - band) + p.min_radius()
    } else {
        p.max_radius2()
    }
}

/// 3D radius at distance `d` from the nearest network sample, whose stored
/// 2D radius is `rho_p`.
///
/// Inside the band `d <= f*rho_p` the sample's radius is kept. Beyond it the
/// linear ramp `a*(d - f*rho_p) + h/2` takes over once it exceeds `rho_p`, and
/// the result is capped at `rho_max`. Taking the larger of the ramp and
/// `rho_p` keeps the field continuous when `rho_p > h/2`.
#[inline]
pub fn rho3_at<T: Real>(d: T, rho_p: T, p: &SizingParams<T>) -> T {
    let band = p.f * rho_p;
    if d <= band {
        return rho_p;
    }
    let ramp = p.a * (d - band) + p.min_radius();
    ramp.max(rho_p).max(p.min_radius()).min(p.rho_max)
}

/// Pairwise inhibition radius.
#[inline]
pub fn inhibition<T: Real>(rho_x: T, rho_y: T) -> T {
    rho_x.min(rho_y)
}

/// Intersection segments of one fracture, in its local frame.
#[derive(Clone, Debug, Default)]
pub struct FeatureSet2<T> {
    pub segments: Vec<Segment<Point2<T>>>,
}

impl<T: Real> FeatureSet2<T> {
    pub fn new(segments: Vec<Segment<Point2<T>>>) -> Self {
        FeatureSet2 { segments }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Distance to the closest segment, `+inf` without segments.
pub fn distance_to_features2<T: Real>(x: &Point2<T>, features: &FeatureSet2<T>) -> T {
    features
        .segments
        .iter()
        .map(|s| dist_point_segment(x, s))
        .fold(T::infinity(), T::min)
}

/// Sampled fracture network used as the feature set of the 3D field.
#[derive(Clone, Debug)]
pub struct FeatureSet3<T> {
    tree: KdTree<T, Point3<T>>,
    rho: Vec<T>,
}

impl<T: Real> FeatureSet3<T> {
    /// `points[i]` carries the 2D radius `rho[i]` it was sampled with.
    pub fn new(points: Vec<Point3<T>>, rho: Vec<T>) -> Self {
        assert_eq!(points.len(), rho.len(), "one radius per feature point");
        FeatureSet3 { tree: KdTree::new(points), rho }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Nearest feature point: (index, distance, stored radius).
    pub fn nearest(&self, x: &Point3<T>) -> Option<(usize, T, T)> {
        self.tree.nearest(x).map(|(i, d)| (i, d, self.rho[i]))
    }
}

/// 3D radius at `x`; fails when there is no network sample to measure from.
pub fn rho3<T: Real>(x: &Point3<T>, features: &FeatureSet3<T>, p: &SizingParams<T>) -> Result<T> {
    let (_, d, rho_p) = features.nearest(x).ok_or(Error::EmptyFeatures)?;
    Ok(rho3_at(d, rho_p, p))
}

/// A sizing field the sampler can query at any point of its domain.
pub trait SizingField<T: Real, P: Coords<T>>: Sync {
    fn rho(&self, x: &P) -> T;

    /// Upper bound on the spatial rate of change of `rho`.
    fn lipschitz(&self) -> T;

    /// Lower bound of `rho` over the domain.
    fn min_rho(&self) -> T;

    /// Upper bound of `rho` over the domain.
    fn max_rho(&self) -> T;
}

/// 2D field of one fracture.
#[derive(Clone, Debug)]
pub struct Sizing2<T> {
    pub params: SizingParams<T>,
    pub features: FeatureSet2<T>,
}

impl<T: Real> SizingField<T, Point2<T>> for Sizing2<T> {
    #[inline]
    fn rho(&self, x: &Point2<T>) -> T {
        rho2(distance_to_features2(x, &self.features), &self.params)
    }

    fn lipschitz(&self) -> T {
        self.params.a
    }

    fn min_rho(&self) -> T {
        self.params.min_radius()
    }

    fn max_rho(&self) -> T {
        self.params.max_radius2()
    }
}

/// Volume field measured from the sampled network; constant `rho_max` when
/// the network is empty.
#[derive(Clone, Debug)]
pub struct Sizing3<T> {
    pub params: SizingParams<T>,
    pub features: FeatureSet3<T>,
}

impl<T: Real> SizingField<T, Point3<T>> for Sizing3<T> {
    #[inline]
    fn rho(&self, x: &Point3<T>) -> T {
        match self.features.nearest(x) {
            Some((_, d, rho_p)) => rho3_at(d, rho_p, &self.params),
            None => self.params.rho_max,
        }
    }

    fn lipschitz(&self) -> T {
        self.params.a
    }

    fn min_rho(&self) -> T {
        self.params.min_radius()
    }

    fn max_rho(&self) -> T {
        self.params.rho_max
    }
}

/// Constant radius field, mostly for tests and calibration runs.
#[derive(Clone, Copy, Debug)]
pub struct ConstantSizing<T>(pub T);

impl<T: Real, P: Coords<T>> SizingField<T, P> for ConstantSizing<T> {
    fn rho(&self, _: &P) -> T {
        self.0
    }

    fn lipschitz(&self) -> T {
        T::zero()
    }

    fn min_rho(&self) -> T {
        self.0
    }

    fn max_rho(&self) -> T {
        self.0
    }
}
