//! Test support shared by the integration targets: a random market
//! generator richer than `synth` (several universities and companies per
//! publication, unstable scientists, tied impact factors), a brute-force
//! oracle that recomputes every quantity straight from the records, and
//! the invariant checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use collabmkt::dataset::{CompanySite, Dataset, GeoPoint, Journal, Publication, Scientist, Sds, University};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// A random market of at most `max_publications` publications.
pub fn random_market(seed: u64, max_publications: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Dataset::builder();

    let n_uni = rng.random_range(1..=8usize);
    let mut uni_points: Vec<GeoPoint> = Vec::new();
    for i in 0..n_uni {
        let p = if i > 0 && rng.random_bool(0.15) {
            uni_points[rng.random_range(0..i)]
        } else {
            GeoPoint::new(rng.random_range(36.0..47.0), rng.random_range(6.5..18.5)).unwrap()
        };
        uni_points.push(p);
        b.push_university(University {
            id: format!("U{i}"),
            name: format!("Uni {i}"),
            location: p,
        });
    }

    let n_sites = rng.random_range(1..=6usize);
    let n_companies = rng.random_range(1..=n_sites);
    for i in 0..n_sites {
        let location = if rng.random_bool(0.15) {
            uni_points[rng.random_range(0..n_uni)]
        } else {
            GeoPoint::new(rng.random_range(36.0..47.0), rng.random_range(6.5..18.5)).unwrap()
        };
        b.push_site(CompanySite {
            id: format!("C{i}"),
            company_id: format!("F{}", rng.random_range(0..n_companies)),
            location,
        });
    }

    let n_sds = rng.random_range(1..=4usize);
    for s in 0..n_sds {
        b.push_sds(Sds {
            code: format!("S{s}"),
            macro_area: "A".into(),
        });
    }
    let mut scientists = Vec::new();
    for s in 0..n_sds {
        // the file schema only knows sectors through their staff
        let floor = rng.random_range(0..n_uni);
        for u in 0..n_uni {
            let lo = usize::from(u == floor);
            for _ in 0..rng.random_range(lo..=4usize) {
                let id = format!("r{:03}", scientists.len());
                scientists.push(id.clone());
                b.push_scientist(Scientist {
                    id,
                    university_id: format!("U{u}"),
                    sds_code: format!("S{s}"),
                    stable_affiliation: rng.random_bool(0.85),
                });
            }
        }
    }

    let n_cat = rng.random_range(1..=3usize);
    let n_journals = rng.random_range(1..=8usize);
    for j in 0..n_journals {
        b.push_journal(Journal {
            id: format!("J{j}"),
            category: format!("K{}", rng.random_range(0..n_cat)),
            // one decimal so ties happen
            impact_factor: (rng.random_range(0.0..5.0f64) * 10.0).round() / 10.0,
        });
    }

    let n_pubs = rng.random_range(0..=max_publications);
    for p in 0..n_pubs {
        let n_auth = rng.random_range(1..=4usize.min(scientists.len()));
        let authors = sample(&mut rng, scientists.len(), n_auth)
            .into_iter()
            .map(|i| scientists[i].clone())
            .collect();
        let n_s = if rng.random_bool(0.7) {
            1
        } else {
            rng.random_range(1..=3usize.min(n_sites))
        };
        let sites = sample(&mut rng, n_sites, n_s)
            .into_iter()
            .map(|i| format!("C{i}"))
            .collect();
        b.push_publication(Publication {
            id: format!("P{p:03}"),
            year: rng.random_range(2001..=2003),
            journal_id: format!("J{}", rng.random_range(0..n_journals)),
            academic_author_ids: authors,
            company_site_ids: sites,
        });
    }
    b.build().unwrap()
}

/// Copy of `d` keeping only the publications accepted by `keep` and
/// applying `edit` to every journal.
pub fn rebuild(d: &Dataset, keep: impl Fn(&Publication) -> bool, edit: impl Fn(&mut Journal)) -> Dataset {
    let mut b = Dataset::builder();
    d.universities().values().for_each(|u| b.push_university(u.clone()));
    d.sites().values().for_each(|s| b.push_site(s.clone()));
    d.sectors().values().for_each(|s| b.push_sds(s.clone()));
    d.scientists().values().for_each(|s| b.push_scientist(s.clone()));
    for j in d.journals().values() {
        let mut j = j.clone();
        edit(&mut j);
        b.push_journal(j);
    }
    d.publications()
        .values()
        .filter(|p| keep(p))
        .for_each(|p| b.push_publication(p.clone()));
    b.build().unwrap()
}

/// Recomputes everything from the raw records with no shared code path.
pub mod oracle {
    use super::*;

    pub fn haversine(a: GeoPoint, b: GeoPoint) -> f64 {
        let (la1, lo1, la2, lo2) = (
            a.lat.to_radians(),
            a.lon.to_radians(),
            b.lat.to_radians(),
            b.lon.to_radians(),
        );
        let h = ((la2 - la1) / 2.0).sin().powi(2) + la1.cos() * la2.cos() * ((lo2 - lo1) / 2.0).sin().powi(2);
        2.0 * 6371.0 * h.sqrt().min(1.0).asin()
    }

    fn has_author(d: &Dataset, p: &Publication, pred: impl Fn(&Scientist) -> bool) -> bool {
        p.academic_author_ids.iter().any(|a| pred(&d.scientists()[a]))
    }

    fn lists_site(p: &Publication, site: &str) -> bool {
        p.company_site_ids.iter().any(|s| s == site)
    }

    /// (publication, university, site, km)
    pub fn uc(d: &Dataset) -> Vec<(String, String, String, f64)> {
        let mut out = Vec::new();
        for p in d.publications().values() {
            for u in d.universities().values() {
                if !has_author(d, p, |s| s.university_id == u.id) {
                    continue;
                }
                for site in d.sites().values() {
                    if lists_site(p, &site.id) {
                        out.push((
                            p.id.clone(),
                            u.id.clone(),
                            site.id.clone(),
                            haversine(u.location, site.location),
                        ));
                    }
                }
            }
        }
        out
    }

    /// (publication, university, sds, site, km)
    pub fn sc(d: &Dataset) -> Vec<(String, String, String, String, f64)> {
        let mut out = Vec::new();
        for p in d.publications().values() {
            for u in d.universities().values() {
                for sds in d.sectors().keys() {
                    if !has_author(d, p, |s| s.university_id == u.id && &s.sds_code == sds) {
                        continue;
                    }
                    for site in d.sites().values() {
                        if lists_site(p, &site.id) {
                            out.push((
                                p.id.clone(),
                                u.id.clone(),
                                sds.clone(),
                                site.id.clone(),
                                haversine(u.location, site.location),
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn percentile(d: &Dataset, journal: &str) -> f64 {
        let j = &d.journals()[journal];
        let peers: Vec<f64> = d
            .journals()
            .values()
            .filter(|x| x.category == j.category)
            .map(|x| x.impact_factor)
            .collect();
        let below = peers.iter().filter(|&&x| x < j.impact_factor).count();
        let ties = peers.iter().filter(|&&x| x == j.impact_factor).count();
        (below as f64 + 0.5 * ties as f64) / peers.len() as f64
    }

    pub fn mass(d: &Dataset, u: &str, sds: &str) -> usize {
        d.scientists()
            .values()
            .filter(|s| s.university_id == u && s.sds_code == sds)
            .count()
    }

    pub fn ss_sector(d: &Dataset, u: &str, sds: &str) -> f64 {
        d.publications()
            .values()
            .filter(|p| has_author(d, p, |s| s.university_id == u && s.sds_code == sds))
            .map(|p| percentile(d, &p.journal_id))
            .sum()
    }

    pub fn ss_scientist(d: &Dataset, id: &str) -> f64 {
        d.publications()
            .values()
            .filter(|p| p.academic_author_ids.iter().any(|a| a == id))
            .map(|p| percentile(d, &p.journal_id))
            .sum()
    }

    pub fn qp(d: &Dataset, u: &str, sds: &str) -> Option<f64> {
        let m = mass(d, u, sds);
        (m > 0).then(|| ss_sector(d, u, sds) / m as f64)
    }

    fn candidates<'a>(d: &'a Dataset, sds: &str) -> Vec<&'a University> {
        d.universities().values().filter(|u| mass(d, &u.id, sds) > 0).collect()
    }

    fn weighted(d: &Dataset, site: &str, sds: &str, w: impl Fn(&University) -> f64) -> Option<f64> {
        let at = d.sites()[site].location;
        let mut num = 0.0;
        let mut den = 0.0;
        for u in candidates(d, sds) {
            num += w(u) * haversine(at, u.location);
            den += w(u);
        }
        (den > 0.0).then(|| num / den)
    }

    pub fn expected(d: &Dataset, site: &str, sds: &str) -> Option<f64> {
        weighted(d, site, sds, |_| 1.0)
    }

    pub fn mbd(d: &Dataset, site: &str, sds: &str) -> Option<f64> {
        weighted(d, site, sds, |u| mass(d, &u.id, sds) as f64)
    }

    pub fn ssbd(d: &Dataset, site: &str, sds: &str) -> Option<f64> {
        weighted(d, site, sds, |u| ss_sector(d, &u.id, sds))
    }

    fn single_site<'a>(d: &'a Dataset, p: &Publication) -> Option<&'a CompanySite> {
        let distinct: BTreeSet<&String> = p.company_site_ids.iter().collect();
        (distinct.len() == 1).then(|| &d.sites()[*distinct.iter().next().unwrap()])
    }

    /// `None` when ineligible, else (better, better and closer).
    pub fn university_cf(d: &Dataset, pub_id: &str) -> Option<(usize, usize)> {
        let p = &d.publications()[pub_id];
        let site = single_site(d, p)?;
        let mut best: Option<(usize, usize)> = None;
        for sds in d.sectors().keys() {
            let chosen: Vec<&University> = d
                .universities()
                .values()
                .filter(|u| has_author(d, p, |s| s.university_id == u.id && &s.sds_code == sds))
                .collect();
            if chosen.is_empty() {
                continue;
            }
            // highest QP, then smallest id
            let mut bench = chosen[0];
            for &u in &chosen[1..] {
                let (a, b) = (qp(d, &u.id, sds).unwrap(), qp(d, &bench.id, sds).unwrap());
                if a > b || (a == b && u.id < bench.id) {
                    bench = u;
                }
            }
            let bq = qp(d, &bench.id, sds).unwrap();
            let bd = haversine(site.location, bench.location);
            let mut better = 0;
            let mut closer = 0;
            for u in candidates(d, sds) {
                if qp(d, &u.id, sds).unwrap() > bq {
                    better += 1;
                    if haversine(site.location, u.location) < bd {
                        closer += 1;
                    }
                }
            }
            if best.is_none_or(|b| (better, closer) < b) {
                best = Some((better, closer));
            }
        }
        best
    }

    #[derive(Debug, PartialEq, Eq)]
    pub enum Scientific {
        MultiCompany,
        Unstable,
        Counts(usize, usize),
    }

    pub fn scientist_cf(d: &Dataset, pub_id: &str) -> Scientific {
        let p = &d.publications()[pub_id];
        let Some(site) = single_site(d, p) else {
            return Scientific::MultiCompany;
        };
        let authors: Vec<&Scientist> = p.academic_author_ids.iter().map(|a| &d.scientists()[a]).collect();
        if authors.iter().any(|s| !s.stable_affiliation) {
            return Scientific::Unstable;
        }
        let mut bench = authors[0];
        for &a in &authors[1..] {
            let (x, y) = (ss_scientist(d, &a.id), ss_scientist(d, &bench.id));
            if x > y || (x == y && a.id < bench.id) {
                bench = a;
            }
        }
        let bss = ss_scientist(d, &bench.id);
        let bd = haversine(site.location, d.universities()[&bench.university_id].location);
        let mut better = 0;
        let mut closer = 0;
        for s in d.scientists().values() {
            if s.sds_code != bench.sds_code || !s.stable_affiliation {
                continue;
            }
            if ss_scientist(d, &s.id) > bss {
                better += 1;
                if haversine(site.location, d.universities()[&s.university_id].location) < bd {
                    closer += 1;
                }
            }
        }
        Scientific::Counts(better, closer)
    }
}

/// Compares every library result on `d` against [`oracle`]. Integers must
/// match exactly, reals to `1e-9` relative.
pub fn check_against_oracle(d: &Dataset) -> Result<(), String> {
    use collabmkt::efficiency::{Counterfactuals, IneligibleReason};
    use collabmkt::indicators::Indicators;
    use collabmkt::{collab, proximity};

    const TOL: f64 = 1e-9;
    let fail = |what: String| Err::<(), String>(what);

    // collaborations
    let uc = collab::enumerate_uc(d);
    let ouc = oracle::uc(d);
    if uc.len() != ouc.len() {
        return fail(format!("uc count {} != {}", uc.len(), ouc.len()));
    }
    for (c, o) in uc.iter().zip(&ouc) {
        if (c.publication_id.as_str(), c.university_id.as_str(), c.site_id.as_str()) != (&o.0, &o.1, &o.2)
            || !rel_eq(c.distance.km(), o.3, TOL)
        {
            return fail(format!("uc record {c:?} != {o:?}"));
        }
    }
    let sc = collab::enumerate_sc(d);
    let osc = oracle::sc(d);
    if sc.len() != osc.len() {
        return fail(format!("sc count {} != {}", sc.len(), osc.len()));
    }
    for (c, o) in sc.iter().zip(&osc) {
        if (
            c.publication_id.as_str(),
            c.university_id.as_str(),
            c.sds_code.as_str(),
            c.site_id.as_str(),
        ) != (&o.0, &o.1, &o.2, &o.3)
            || !rel_eq(c.distance.km(), o.4, TOL)
        {
            return fail(format!("sc record {c:?} != {o:?}"));
        }
    }
    // per-publication counting rule, from raw id sets
    for p in d.publications().values() {
        let sites: BTreeSet<&String> = p.company_site_ids.iter().collect();
        let mut per_uni: BTreeMap<&String, BTreeSet<&String>> = BTreeMap::new();
        for a in &p.academic_author_ids {
            let s = &d.scientists()[a];
            per_uni.entry(&s.university_id).or_default().insert(&s.sds_code);
        }
        let m = per_uni.len();
        let sds_total: usize = per_uni.values().map(BTreeSet::len).sum();
        let got_uc = ouc.iter().filter(|o| o.0 == p.id).count();
        let got_sc = osc.iter().filter(|o| o.0 == p.id).count();
        if got_uc != m * sites.len() || got_sc != sds_total * sites.len() {
            return fail(format!("counting rule broken on {}", p.id));
        }
    }
    let s = collab::summary(d);
    let uc_pairs: BTreeSet<(&String, &String)> = ouc.iter().map(|o| (&o.1, &o.2)).collect();
    let sc_pairs: BTreeSet<(&String, &String, &String)> = osc.iter().map(|o| (&o.1, &o.2, &o.3)).collect();
    if (s.uc_pairs, s.sc_pairs) != (uc_pairs.len(), sc_pairs.len()) {
        return fail(format!(
            "pairs {:?} != {:?}",
            (s.uc_pairs, s.sc_pairs),
            (uc_pairs.len(), sc_pairs.len())
        ));
    }

    // indicators
    let ind = Indicators::compute(d);
    for j in d.journals().keys() {
        let got = ind.percentile(j).unwrap().value();
        if !rel_eq(got, oracle::percentile(d, j), TOL) {
            return fail(format!("percentile of {j}"));
        }
    }
    for (u, sds) in d.staff_index().keys() {
        let p = ind.profile(u, sds).unwrap();
        if p.mass != oracle::mass(d, u, sds) {
            return fail(format!("mass of ({u}, {sds})"));
        }
        if !rel_eq(p.ss, oracle::ss_sector(d, u, sds), TOL) || !rel_eq(p.qp, oracle::qp(d, u, sds).unwrap(), TOL) {
            return fail(format!(
                "ss/qp of ({u}, {sds}): {} vs {}",
                p.ss,
                oracle::ss_sector(d, u, sds)
            ));
        }
    }
    for id in d.scientists().keys() {
        if !rel_eq(ind.scientist_ss(id), oracle::ss_scientist(d, id), TOL) {
            return fail(format!("ss of scientist {id}"));
        }
    }

    // distances
    for site in d.sites().keys() {
        for sds in d.sectors().keys() {
            let e = proximity::expectations(d, &ind, site, sds).ok();
            let want = oracle::expected(d, site, sds);
            match (e, want) {
                (None, None) => {}
                (Some(e), Some(w)) => {
                    let mbd = oracle::mbd(d, site, sds).unwrap();
                    let ssbd = oracle::ssbd(d, site, sds);
                    let ss_ok = match (e.ssbd_km, ssbd) {
                        (None, None) => true,
                        (Some(a), Some(b)) => rel_eq(a, b, TOL),
                        _ => false,
                    };
                    if !rel_eq(e.expected_km, w, TOL) || !rel_eq(e.mbd_km, mbd, TOL) || !ss_ok {
                        return fail(format!("expectations at ({site}, {sds}): {e:?} vs {w}/{mbd}/{ssbd:?}"));
                    }
                }
                other => return fail(format!("expectation definedness at ({site}, {sds}): {other:?}")),
            }
        }
    }

    // counterfactuals
    let cf = Counterfactuals::new(d, &ind);
    for id in d.publications().keys() {
        let u = cf.university(id).unwrap();
        let got = u.verdict.as_ref().map(|v| (v.better_count, v.better_and_closer_count));
        if got != oracle::university_cf(d, id) {
            return fail(format!(
                "university counterfactual of {id}: {got:?} vs {:?}",
                oracle::university_cf(d, id)
            ));
        }
        let s = cf.scientist(id).unwrap();
        let got = match (&s.verdict, s.ineligible) {
            (Some(v), _) => oracle::Scientific::Counts(v.better_count, v.better_and_closer_count),
            (None, Some(IneligibleReason::MultiCompany)) => oracle::Scientific::MultiCompany,
            (None, _) => oracle::Scientific::Unstable,
        };
        let want = oracle::scientist_cf(d, id);
        if got != want {
            return fail(format!("scientist counterfactual of {id}: {got:?} vs {want:?}"));
        }
    }
    Ok(())
}

pub type Invariant = (&'static str, fn(u64) -> Result<(), String>);

/// Every invariant, each checked on the random market of the given seed
/// (or on seed-derived inputs for the geometric ones).
pub fn invariants() -> Vec<Invariant> {
    vec![
        ("dataset: CSV round trip is stable", inv::round_trip),
        ("dataset: staff index matches records", inv::staff_index),
        ("geo: symmetry is exact", inv::symmetry),
        ("geo: triangle inequality", inv::triangle),
        ("geo: monotone along a meridian", inv::meridian),
        ("collab: counts match brute-force cross product", inv::collab_counts),
        ("collab: pairs never exceed collaborations", inv::pairs_bounded),
        ("collab: grid marginal equals UC collaborations", inv::grid_marginal),
        ("indicators: percentiles in (0,1) averaging 0.5", inv::percentiles),
        (
            "indicators: SS is additive over publication partitions",
            inv::ss_additive,
        ),
        ("indicators: IF scaling keeps every ranking", inv::if_scaling_rankings),
        ("indicators: scientist SS sum >= sector SS", inv::scientist_sum),
        (
            "proximity: expectations within candidate extremes",
            inv::expectation_bounds,
        ),
        ("proximity: moving mass nearer never raises MBD", inv::mass_shift),
        ("proximity: report equals row-sum oracle", inv::report_rows),
        ("efficiency: rank-1 benchmark has no better partner", inv::rank_one),
        ("efficiency: closer <= better <= active - 1", inv::cf_bounds),
        ("efficiency: brute-force agreement", inv::cf_oracle),
        ("efficiency: IF scaling keeps every result", inv::if_scaling_results),
        ("synth: same seed gives identical bytes", inv::synth_determinism),
        ("synth: generated markets validate clean", inv::synth_valid),
        (
            "synth: uniform ratio near 1, proximity ratio above 1",
            inv::synth_direction,
        ),
    ]
}

mod inv {
    use super::*;
    use collabmkt::efficiency::{Counterfactuals, Level};
    use collabmkt::indicators::{Indicators, RankLevel};
    use collabmkt::synth::{self, ChoiceModel, SynthConfig};
    use collabmkt::{collab, dataset, geo, io, proximity};

    fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
        if ok {
            Ok(())
        } else {
            Err(msg())
        }
    }

    fn market(seed: u64) -> Dataset {
        random_market(seed, 50)
    }

    fn random_point(rng: &mut ChaCha8Rng) -> GeoPoint {
        GeoPoint::new(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0)).unwrap()
    }

    pub fn round_trip(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        io::write_dataset(&d, dir.path()).map_err(|e| e.to_string())?;
        let back = io::load_dataset(&io::DataPaths::in_dir(dir.path())).map_err(|e| e.to_string())?;
        ensure(back == d, || "reloaded dataset differs".into())?;
        io::write_dataset(&back, dir.path()).map_err(|e| e.to_string())?;
        let again = io::load_dataset(&io::DataPaths::in_dir(dir.path())).map_err(|e| e.to_string())?;
        ensure(again == d, || "second reload differs".into())
    }

    pub fn staff_index(seed: u64) -> Result<(), String> {
        let d = market(seed);
        for u in d.universities().keys() {
            for s in d.sectors().keys() {
                ensure(d.staff(u, s) == oracle::mass(&d, u, s), || format!("staff({u}, {s})"))?;
            }
        }
        Ok(())
    }

    pub fn symmetry(seed: u64) -> Result<(), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let (a, b) = (random_point(&mut rng), random_point(&mut rng));
            ensure(geo::great_circle_km(a, b) == geo::great_circle_km(b, a), || {
                format!("{a:?} {b:?}")
            })?;
        }
        Ok(())
    }

    pub fn triangle(seed: u64) -> Result<(), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
            let ac = geo::great_circle_km(a, c).km();
            let via = geo::great_circle_km(a, b).km() + geo::great_circle_km(b, c).km();
            ensure(ac <= via * (1.0 + 1e-9), || format!("{a:?} {b:?} {c:?}: {ac} > {via}"))?;
        }
        Ok(())
    }

    pub fn meridian(seed: u64) -> Result<(), String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lon = rng.random_range(-180.0..=180.0);
        let start = rng.random_range(-90.0..0.0);
        let origin = GeoPoint::new(start, lon).unwrap();
        let mut last = 0.0;
        let mut lat: f64 = start;
        while lat < start + 90.0 {
            lat += rng.random_range(0.01..2.0);
            let d = geo::great_circle_km(origin, GeoPoint::new(lat.min(start + 90.0), lon).unwrap()).km();
            ensure(d >= last, || format!("not monotone at {lat}"))?;
            last = d;
        }
        Ok(())
    }

    pub fn collab_counts(seed: u64) -> Result<(), String> {
        let d = market(seed);
        ensure(collab::enumerate_uc(&d).len() == oracle::uc(&d).len(), || "uc".into())?;
        ensure(collab::enumerate_sc(&d).len() == oracle::sc(&d).len(), || "sc".into())
    }

    pub fn pairs_bounded(seed: u64) -> Result<(), String> {
        let s = collab::summary(&market(seed));
        ensure(
            s.uc_pairs <= s.uc_collaborations && s.sc_pairs <= s.sc_collaborations,
            || format!("{s:?}"),
        )
    }

    pub fn grid_marginal(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let g = collab::frequency_grids(&d);
        ensure(g.uc_collaborations() == collab::enumerate_uc(&d).len(), || {
            "marginal".into()
        })?;
        ensure(
            g.cells.iter().map(|c| c.publications).sum::<usize>() == d.publications().len(),
            || "cell counts".into(),
        )
    }

    pub fn percentiles(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let ind = Indicators::compute(&d);
        let mut per_cat: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for j in d.journals().values() {
            let p = ind.percentile(&j.id).unwrap().value();
            ensure(p > 0.0 && p < 1.0, || format!("{} out of (0,1)", j.id))?;
            per_cat.entry(&j.category).or_default().push(p);
        }
        for (cat, ps) in per_cat {
            let mean = ps.iter().sum::<f64>() / ps.len() as f64;
            ensure((mean - 0.5).abs() < 1e-12, || format!("category {cat} mean {mean}"))?;
        }
        Ok(())
    }

    pub fn ss_additive(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let chosen: BTreeSet<String> = d
            .publications()
            .keys()
            .filter(|_| rng.random_bool(0.5))
            .cloned()
            .collect();
        let a = rebuild(&d, |p| chosen.contains(&p.id), |_| {});
        let b = rebuild(&d, |p| !chosen.contains(&p.id), |_| {});
        let (whole, ia, ib) = (
            Indicators::compute(&d),
            Indicators::compute(&a),
            Indicators::compute(&b),
        );
        for (u, s) in d.staff_index().keys() {
            let sum = ia.sector_ss(u, s) + ib.sector_ss(u, s);
            ensure(rel_eq(whole.sector_ss(u, s), sum, 1e-12), || format!("({u}, {s})"))?;
        }
        for id in d.scientists().keys() {
            let sum = ia.scientist_ss(id) + ib.scientist_ss(id);
            ensure(rel_eq(whole.scientist_ss(id), sum, 1e-12), || format!("scientist {id}"))?;
        }
        Ok(())
    }

    fn scaled(d: &Dataset, seed: u64) -> Dataset {
        let factor = ChaCha8Rng::seed_from_u64(seed).random_range(0.1..10.0);
        rebuild(d, |_| true, move |j| j.impact_factor *= factor)
    }

    pub fn if_scaling_rankings(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let s = scaled(&d, seed);
        let (i1, i2) = (Indicators::compute(&d), Indicators::compute(&s));
        for sds in d.sectors().keys() {
            for level in [
                RankLevel::UniversityByQp,
                RankLevel::ScientistBySs { stable_only: true },
            ] {
                let order = |i: &Indicators, x: &Dataset| {
                    i.rank(x, sds, level)
                        .map(|r| r.entries.into_iter().map(|e| e.entity_id).collect::<Vec<_>>())
                        .ok()
                };
                ensure(order(&i1, &d) == order(&i2, &s), || format!("{sds} {level:?}"))?;
            }
        }
        Ok(())
    }

    pub fn scientist_sum(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let ind = Indicators::compute(&d);
        for (u, s) in d.staff_index().keys() {
            let members: f64 = d
                .scientists()
                .values()
                .filter(|x| &x.university_id == u && &x.sds_code == s)
                .map(|x| ind.scientist_ss(&x.id))
                .sum();
            ensure(members + 1e-12 >= ind.sector_ss(u, s), || format!("({u}, {s})"))?;
        }
        Ok(())
    }

    pub fn expectation_bounds(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let ind = Indicators::compute(&d);
        for site in d.sites().values() {
            for sds in d.sectors().keys() {
                let Ok(e) = proximity::expectations(&d, &ind, &site.id, sds) else {
                    continue;
                };
                let ds: Vec<f64> = d
                    .active_universities(sds)
                    .iter()
                    .map(|u| geo::great_circle_km(site.location, d.universities()[u].location).km())
                    .collect();
                let lo = ds.iter().copied().fold(f64::INFINITY, f64::min) * (1.0 - 1e-12);
                let hi = ds.iter().copied().fold(0.0, f64::max) * (1.0 + 1e-12);
                let within = |x: f64| lo <= x && x <= hi;
                ensure(
                    within(e.expected_km) && within(e.mbd_km) && e.ssbd_km.is_none_or(within),
                    || format!("({}, {sds}) {e:?} outside [{lo}, {hi}]", site.id),
                )?;
            }
        }
        Ok(())
    }

    pub fn mass_shift(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbeef);
        for site in d.sites().values() {
            for sds in d.sectors().keys() {
                let active = d.active_universities(sds);
                if active.len() < 2 {
                    continue;
                }
                let dist = |u: &str| geo::great_circle_km(site.location, d.universities()[u].location).km();
                let a = &active[rng.random_range(0..active.len())];
                let b = &active[rng.random_range(0..active.len())];
                let (near, far) = if dist(a) <= dist(b) { (a, b) } else { (b, a) };
                if near == far {
                    continue;
                }
                // move one scientist of `far` in this sector to `near`
                let mover = d
                    .scientists()
                    .values()
                    .find(|s| &s.university_id == far && &s.sds_code == sds)
                    .unwrap()
                    .id
                    .clone();
                let mut bld = Dataset::builder();
                d.universities().values().for_each(|u| bld.push_university(u.clone()));
                d.sites().values().for_each(|s| bld.push_site(s.clone()));
                d.sectors().values().for_each(|s| bld.push_sds(s.clone()));
                d.journals().values().for_each(|j| bld.push_journal(j.clone()));
                for s in d.scientists().values() {
                    let mut s = s.clone();
                    if s.id == mover {
                        s.university_id = near.clone();
                    }
                    bld.push_scientist(s);
                }
                let moved = bld.build().unwrap();
                let before = proximity::mass_barycentric_distance(&d, &site.id, sds).unwrap().km();
                let after = proximity::mass_barycentric_distance(&moved, &site.id, sds)
                    .unwrap()
                    .km();
                ensure(after <= before * (1.0 + 1e-12), || {
                    format!("MBD rose {before} -> {after}")
                })?;
            }
        }
        Ok(())
    }

    pub fn report_rows(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let ind = Indicators::compute(&d);
        let rows = proximity::proximity_rows(&d, &ind);
        let r = proximity::summarize_rows(&rows);
        let osc = oracle::sc(&d);
        ensure(rows.len() == osc.len(), || "row count".into())?;
        if osc.is_empty() {
            return ensure(r.real.mean_km.is_none(), || "empty report has a mean".into());
        }
        let n = osc.len() as f64;
        let real: f64 = osc.iter().map(|o| o.4).sum::<f64>() / n;
        let exp: f64 = osc
            .iter()
            .map(|o| oracle::expected(&d, &o.3, &o.2).unwrap())
            .sum::<f64>()
            / n;
        let mbd: f64 = osc.iter().map(|o| oracle::mbd(&d, &o.3, &o.2).unwrap()).sum::<f64>() / n;
        let ss: Vec<f64> = osc.iter().filter_map(|o| oracle::ssbd(&d, &o.3, &o.2)).collect();
        // strict comparison is ill-conditioned at ties, so only rows clear
        // of the tolerance band are decisive
        let exceeds_within = |tol: f64| {
            osc.iter()
                .filter(|o| oracle::expected(&d, &o.3, &o.2).unwrap() > o.4 * (1.0 + tol))
                .count()
        };
        let (surely, maybe) = (exceeds_within(1e-9), exceeds_within(-1e-9));
        ensure(rel_eq(r.real.mean_km.unwrap(), real, 1e-9), || "real".into())?;
        ensure(rel_eq(r.expected.mean_km.unwrap(), exp, 1e-9), || "expected".into())?;
        ensure(rel_eq(r.mass_barycentric.mean_km.unwrap(), mbd, 1e-9), || "mbd".into())?;
        ensure((surely..=maybe).contains(&r.expected.exceeds_real), || {
            "exceeds count".into()
        })?;
        ensure(r.ssbd_excluded == osc.len() - ss.len(), || "ssbd exclusions".into())?;
        if !ss.is_empty() {
            let m = ss.iter().sum::<f64>() / ss.len() as f64;
            ensure(rel_eq(r.ss_barycentric.mean_km.unwrap(), m, 1e-9), || "ssbd".into())?;
        }
        Ok(())
    }

    pub fn rank_one(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let ind = Indicators::compute(&d);
        let cf = Counterfactuals::new(&d, &ind);
        for r in cf.all(Level::University) {
            let Some(v) = r.verdict else { continue };
            let ranking = ind.rank(&d, &v.sds_code, RankLevel::UniversityByQp).unwrap();
            if ranking.entries[0].entity_id == v.benchmark_id {
                ensure(v.better_count == 0, || {
                    format!("{} has better than rank 1", r.publication_id)
                })?;
            }
        }
        Ok(())
    }

    pub fn cf_bounds(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let ind = Indicators::compute(&d);
        let cf = Counterfactuals::new(&d, &ind);
        for level in [Level::University, Level::Scientist] {
            for r in cf.all(level) {
                let Some(v) = r.verdict else { continue };
                ensure(
                    v.better_and_closer_count <= v.better_count && v.better_count < v.active,
                    || format!("{level} {}: {v:?}", r.publication_id),
                )?;
            }
        }
        Ok(())
    }

    pub fn cf_oracle(seed: u64) -> Result<(), String> {
        check_against_oracle(&market(seed))
    }

    pub fn if_scaling_results(seed: u64) -> Result<(), String> {
        let d = market(seed);
        let s = scaled(&d, seed);
        let (i1, i2) = (Indicators::compute(&d), Indicators::compute(&s));
        let (c1, c2) = (Counterfactuals::new(&d, &i1), Counterfactuals::new(&s, &i2));
        for level in [Level::University, Level::Scientist] {
            ensure(c1.all(level) == c2.all(level), || format!("{level} results changed"))?;
        }
        Ok(())
    }

    fn small_synth(seed: u64, choice: ChoiceModel) -> SynthConfig {
        SynthConfig {
            seed,
            universities: 8,
            sites: 10,
            sds: 3,
            scientists_per_sds: [1, 6],
            publications: 200,
            choice,
            ..SynthConfig::default()
        }
    }

    pub fn synth_determinism(seed: u64) -> Result<(), String> {
        let cfg = small_synth(seed, ChoiceModel::Quality { prior: 1.0 });
        let a = io::dataset_bytes(&synth::generate(&cfg).unwrap()).unwrap();
        let b = io::dataset_bytes(&synth::generate(&cfg).unwrap()).unwrap();
        ensure(a == b, || "bytes differ".into())
    }

    pub fn synth_valid(seed: u64) -> Result<(), String> {
        let cfg = small_synth(seed, ChoiceModel::Mass);
        let d = synth::generate(&cfg).map_err(|e| e.to_string())?;
        let report = dataset::validate(&d);
        ensure(report.is_clean(), || format!("{:?}", report.findings))
    }

    pub fn synth_direction(seed: u64) -> Result<(), String> {
        let uni = synth::generate(&SynthConfig {
            publications: 2000,
            ..small_synth(seed, ChoiceModel::Uniform)
        })
        .unwrap();
        let r = proximity::proximity_report(&uni);
        let ratio = r.expected.ratio_to_real.unwrap();
        ensure((0.85..=1.15).contains(&ratio), || format!("uniform ratio {ratio}"))?;
        let prox = synth::generate(&small_synth(seed, ChoiceModel::Proximity { lambda_km: 60.0 })).unwrap();
        let ratio = proximity::proximity_report(&prox).expected.ratio_to_real.unwrap();
        ensure(ratio > 1.0, || format!("proximity ratio {ratio}"))
    }
}
