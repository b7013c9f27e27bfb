//! A tiny hand-checkable market used throughout the docs and tests.

use crate::dataset::{Dataset, GeoPoint};

/// Three universities on the equator at longitudes 0, 1 and 3, one company
/// site at the origin, one sector `MAT/01` and two publications:
///
/// | university | location | scientists |
/// |------------|----------|------------|
/// | U1 | (0, 0) | s1 |
/// | U2 | (0, 1) | s2, s3 |
/// | U3 | (0, 3) | s4 |
///
/// Journals `J1` (IF 2.0) and `J2` (IF 1.0) share category `X`.
/// `P1` is published in `J1` by `s2` with site `C1`; `P2` in `J2` by `s4`
/// with `C1`. All scientists have a stable affiliation.
pub fn micro() -> Dataset {
    let p = |lat, lon| GeoPoint::new(lat, lon).expect("fixture coordinates are valid");
    Dataset::builder()
        .university("U1", "University One", p(0.0, 0.0))
        .university("U2", "University Two", p(0.0, 1.0))
        .university("U3", "University Three", p(0.0, 3.0))
        .site("C1", "ACME", p(0.0, 0.0))
        .sds("MAT/01", "01")
        .scientist("s1", "U1", "MAT/01", true)
        .scientist("s2", "U2", "MAT/01", true)
        .scientist("s3", "U2", "MAT/01", true)
        .scientist("s4", "U3", "MAT/01", true)
        .journal("J1", "X", 2.0)
        .journal("J2", "X", 1.0)
        .publication("P1", 2002, "J1", &["s2"], &["C1"])
        .publication("P2", 2002, "J2", &["s4"], &["C1"])
        .build()
        .expect("fixture ids are unique")
}
