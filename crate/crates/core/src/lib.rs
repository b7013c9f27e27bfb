//! Spatial and bibliometric analysis of the market for university-industry
//! research collaboration.
//!
//! The crate takes an identity-resolved snapshot of universities, company
//! sites, scientists, journals and co-authored publications, and answers
//! three questions about it:
//!
//! 1. What do the collaborations look like? ([`collab`])
//! 2. Do companies pick partners closer than chance, size or quality would
//!    predict? ([`proximity`], built on [`indicators`] and [`geo`])
//! 3. Could a company have found a better partner that was also closer?
//!    ([`efficiency`])
//!
//! [`synth`] generates seeded markets with known choice behaviour, which is
//! how the analyses are checked end to end.
//!
//! ```
//! use collabmkt::{collab, proximity, sample};
//!
//! let market = sample::micro();
//! assert_eq!(collab::summary(&market).uc_collaborations, 2);
//! let report = proximity::proximity_report(&market);
//! assert!((report.expected.mean_km.unwrap() - 148.26).abs() < 0.01);
//! ```

pub mod collab;
pub mod dataset;
pub mod efficiency;
pub mod geo;
pub mod indicators;
pub mod io;
pub mod proximity;
pub mod sample;
pub mod synth;

pub use dataset::{Dataset, GeoPoint};
pub use geo::{great_circle_km, DistanceKm};
pub use indicators::Indicators;
