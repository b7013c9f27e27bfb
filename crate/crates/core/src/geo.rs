//! Great-circle distances on a spherical Earth.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::GeoPoint;

/// Mean Earth radius used for every distance in the crate.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// A non-negative surface distance in kilometers.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DistanceKm(f64);

impl DistanceKm {
    pub const ZERO: DistanceKm = DistanceKm(0.0);

    /// Wraps a kilometer value. Returns `None` for negative or non-finite input.
    pub fn new(km: f64) -> Option<Self> {
        (km.is_finite() && km >= 0.0).then_some(DistanceKm(km))
    }

    pub fn km(self) -> f64 {
        self.0
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for DistanceKm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(precision) = f.precision() {
            write!(f, "{:.*} km", precision, self.0)
        } else {
            write!(f, "{} km", self.0)
        }
    }
}

/// Haversine distance between two points on a sphere of radius
/// [`EARTH_RADIUS_KM`].
///
/// The arguments are put in a canonical order before evaluation, so
/// `great_circle_km(a, b)` and `great_circle_km(b, a)` are bit-identical.
///
/// ```
/// use collabmkt::{dataset::GeoPoint, geo::great_circle_km};
///
/// let a = GeoPoint::new(0.0, 0.0).unwrap();
/// let b = GeoPoint::new(0.0, 1.0).unwrap();
/// assert!((great_circle_km(a, b).km() - 111.195).abs() < 1e-3);
/// ```
pub fn great_circle_km(a: GeoPoint, b: GeoPoint) -> DistanceKm {
    let (p, q) = if (a.lat, a.lon) <= (b.lat, b.lon) {
        (a, b)
    } else {
        (b, a)
    };
    let lat1 = p.lat.to_radians();
    let lat2 = q.lat.to_radians();
    let half_dlat = (q.lat - p.lat).to_radians() / 2.0;
    let half_dlon = (q.lon - p.lon).to_radians() / 2.0;

    let h = half_dlat.sin().powi(2) + lat1.cos() * lat2.cos() * half_dlon.sin().powi(2);
    let h = h.clamp(0.0, 1.0);
    // atan2 keeps precision near the antipode, where asin(sqrt(h)) does not.
    let central_angle = 2.0 * h.sqrt().atan2((1.0 - h).sqrt());
    DistanceKm(EARTH_RADIUS_KM * central_angle)
}
