//! Open sets with exact membership and distance queries, and certificates
//! of fatness at infinity.
//!
//! Every set is described by a signed distance `sd(x)`: the distance to the
//! complement for points of the set and minus the distance to the set for
//! points outside. Catalog variants compute it exactly; combinators compose
//! it by `min` (intersection), `max` (union) and negation (interior of the
//! complement), which is exact inside intersections and complements.
//!
//! Points are slices in `ℝ^d`; the last coordinate is the distinguished
//! axis `x_d`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum OpenSetSpec {
    /// `{x_d > 0}`.
    HalfSpace,
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    ExteriorBall {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// `{x : angle(x, e_d) < aperture}`, vertex at the origin.
    Cone {
        aperture: f64,
    },
    /// `{x_d < 0} ∪ {x_d > width}`.
    SlabComplement {
        width: f64,
    },
    /// `⋃_{n ≥ start} B(base^n e_d, base^n / 4)`.
    BallChain {
        base: f64,
        start: i32,
    },
    Intersection(Box<OpenSetSpec>, Box<OpenSetSpec>),
    Union(Box<OpenSetSpec>, Box<OpenSetSpec>),
    /// Interior of the complement.
    Complement(Box<OpenSetSpec>),
}

/// Radius of the `n`-th chain ball relative to its distance from the origin.
pub const CHAIN_RADIUS_FRACTION: f64 = 0.25;

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().max(y.len());
    (0..n)
        .map(|i| {
            let a = x.get(i).copied().unwrap_or(0.0) - y.get(i).copied().unwrap_or(0.0);
            a * a
        })
        .sum::<f64>()
        .sqrt()
}

fn last(x: &[f64]) -> f64 {
    x.last().copied().unwrap_or(0.0)
}

/// `t · e_d` in `ℝ^d`.
pub fn axis_point(d: usize, t: f64) -> Vec<f64> {
    let mut p = vec![0.0; d];
    p[d - 1] = t;
    p
}

impl OpenSetSpec {
    pub fn half_space() -> Self {
        OpenSetSpec::HalfSpace
    }

    pub fn ball(radius: f64) -> Self {
        OpenSetSpec::Ball { center: vec![], radius }
    }

    pub fn exterior_ball(radius: f64) -> Self {
        OpenSetSpec::ExteriorBall { center: vec![], radius }
    }

    pub fn ball_chain(base: f64, start: i32) -> Result<Self> {
        // neighbouring balls are disjoint iff base − 1 > q(1 + base)
        let q = CHAIN_RADIUS_FRACTION;
        if !(base - 1.0 > q * (1.0 + base)) {
            return Err(domain(format!("chain base {base} makes neighbouring balls overlap")));
        }
        Ok(OpenSetSpec::BallChain { base, start })
    }

    /// Centre of the `n`-th chain ball.
    pub fn chain_center(base: f64, n: i32, d: usize) -> Vec<f64> {
        axis_point(d, base.powi(n))
    }

    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            OpenSetSpec::HalfSpace => last(x),
            OpenSetSpec::Ball { center, radius } => radius - distance(x, center),
            OpenSetSpec::ExteriorBall { center, radius } => distance(x, center) - radius,
            OpenSetSpec::Annulus { center, inner, outer } => {
                let r = distance(x, center);
                (r - inner).min(outer - r)
            }
            OpenSetSpec::Cone { aperture } => {
                let r = norm(x);
                if r == 0.0 {
                    return 0.0;
                }
                let psi = (last(x) / r).clamp(-1.0, 1.0).acos();
                let gap = aperture - psi;
                // inside: nearest complement point is on the boundary ray or
                // the vertex; outside: symmetric statement for the other cone
                let s = if gap.abs() >= 0.5 * PI { r } else { r * gap.abs().sin() };
                if gap > 0.0 {
                    s
                } else {
                    -s
                }
            }
            OpenSetSpec::SlabComplement { width } => (-last(x)).max(last(x) - width),
            OpenSetSpec::BallChain { base, start } => {
                let d = x.len();
                let q = CHAIN_RADIUS_FRACTION;
                let r = norm(x);
                let mut cands: Vec<i32> = vec![*start, start + 1];
                if r > 0.0 {
                    let k = (r.ln() / base.ln()).floor() as i32;
                    cands.extend((k - 1)..=(k + 2));
                }
                cands
                    .into_iter()
                    .filter(|n| n >= start)
                    .map(|n| {
                        let c = base.powi(n);
                        q * c - distance(x, &axis_point(d, c))
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            OpenSetSpec::Intersection(a, b) => a.signed_distance(x).min(b.signed_distance(x)),
            OpenSetSpec::Union(a, b) => a.signed_distance(x).max(b.signed_distance(x)),
            OpenSetSpec::Complement(a) => -a.signed_distance(x),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.signed_distance(x) > 0.0
    }

    /// `δ_D(x)`; zero outside the set.
    pub fn dist_to_complement(&self, x: &[f64]) -> f64 {
        self.signed_distance(x).max(0.0)
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            OpenSetSpec::Ball { .. } | OpenSetSpec::Annulus { .. } => true,
            OpenSetSpec::Intersection(a, b) => a.is_bounded() || b.is_bounded(),
            OpenSetSpec::Union(a, b) => a.is_bounded() && b.is_bounded(),
            _ => false,
        }
    }

    /// Whether the closed ball `B̄(0, r)` lies outside the set, the shape
    /// required of `U` in the factorization experiments.
    pub fn avoids_ball(&self, r: f64) -> bool {
        match self {
            OpenSetSpec::ExteriorBall { center, radius } => norm(center) + r <= *radius,
            OpenSetSpec::Intersection(a, b) => a.avoids_ball(r) || b.avoids_ball(r),
            _ => false,
        }
    }
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(";")
}

impl fmt::Display for OpenSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let centered = |f: &mut fmt::Formatter<'_>, c: &[f64]| {
            if c.iter().any(|v| *v != 0.0) {
                write!(f, ",center={}", fmt_point(c))
            } else {
                Ok(())
            }
        };
        match self {
            OpenSetSpec::HalfSpace => write!(f, "halfspace"),
            OpenSetSpec::Ball { center, radius } => {
                write!(f, "ball:r={radius:?}")?;
                centered(f, center)
            }
            OpenSetSpec::ExteriorBall { center, radius } => {
                write!(f, "extball:r={radius:?}")?;
                centered(f, center)
            }
            OpenSetSpec::Annulus { center, inner, outer } => {
                write!(f, "annulus:inner={inner:?},outer={outer:?}")?;
                centered(f, center)
            }
            OpenSetSpec::Cone { aperture } => write!(f, "cone:aperture={aperture:?}"),
            OpenSetSpec::SlabComplement { width } => write!(f, "slab:width={width:?}"),
            OpenSetSpec::BallChain { base, start } => write!(f, "chain:base={base:?},start={start}"),
            OpenSetSpec::Intersection(a, b) => write!(f, "{a}&{b}"),
            OpenSetSpec::Union(a, b) => write!(f, "{a}|{b}"),
            OpenSetSpec::Complement(a) => write!(f, "!{a}"),
        }
    }
}

fn parse_atom(s: &str) -> Result<OpenSetSpec> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix('!') {
        return Ok(OpenSetSpec::Complement(Box::new(parse_atom(rest)?)));
    }
    let (head, body) = s.split_once(':').unwrap_or((s, ""));
    let mut params: Vec<(String, String)> = Vec::new();
    for kv in body.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value in domain spec, got {kv:?}")))?;
        params.push((k.trim().to_string(), v.trim().to_string()));
    }
    let num = |key: &str, default: Option<f64>| -> Result<f64> {
        match params.iter().find(|(k, _)| k == key) {
            Some((_, v)) => v
                .parse()
                .map_err(|_| Error::Parse(format!("domain parameter {key}={v:?} is not a number"))),
            None => default.ok_or_else(|| Error::Parse(format!("domain spec {s:?} needs {key}="))),
        }
    };
    let center = || -> Result<Vec<f64>> {
        match params.iter().find(|(k, _)| k == "center") {
            Some((_, v)) => v
                .split(';')
                .map(|c| {
                    c.trim()
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad centre coordinate {c:?}")))
                })
                .collect(),
            None => Ok(vec![]),
        }
    };
    let known: &[&str] = match head {
        "halfspace" => &[],
        "ball" | "extball" => &["r", "center"],
        "annulus" => &["inner", "outer", "center"],
        "cone" => &["aperture"],
        "slab" => &["width"],
        "chain" => &["base", "start"],
        _ => return Err(Error::Parse(format!("unknown domain {head:?}"))),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(Error::Parse(format!("unknown parameter {k:?} for domain {head:?}")));
    }
    let spec = match head {
        "halfspace" => OpenSetSpec::HalfSpace,
        "ball" => OpenSetSpec::Ball {
            center: center()?,
            radius: num("r", None)?,
        },
        "extball" => OpenSetSpec::ExteriorBall {
            center: center()?,
            radius: num("r", None)?,
        },
        "annulus" => OpenSetSpec::Annulus {
            center: center()?,
            inner: num("inner", None)?,
            outer: num("outer", None)?,
        },
        "cone" => OpenSetSpec::Cone {
            aperture: num("aperture", None)?,
        },
        "slab" => OpenSetSpec::SlabComplement {
            width: num("width", Some(1.0))?,
        },
        "chain" => OpenSetSpec::ball_chain(num("base", Some(2.0))?, num("start", Some(1.0))? as i32)?,
        _ => unreachable!(),
    };
    validate(&spec)?;
    Ok(spec)
}

fn validate(spec: &OpenSetSpec) -> Result<()> {
    let ok = match spec {
        OpenSetSpec::Ball { radius, .. } | OpenSetSpec::ExteriorBall { radius, .. } => *radius > 0.0,
        OpenSetSpec::Annulus { inner, outer, .. } => *inner >= 0.0 && outer > inner,
        OpenSetSpec::Cone { aperture } => *aperture > 0.0 && *aperture < PI,
        OpenSetSpec::SlabComplement { width } => *width > 0.0,
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(domain(format!("invalid domain parameters in {spec}")))
    }
}

impl FromStr for OpenSetSpec {
    type Err = Error;

    /// Grammar: `union := inter ('|' inter)*`, `inter := atom ('&' atom)*`,
    /// `atom := '!'? name (':' key=value (',' key=value)*)?`.
    fn from_str(s: &str) -> Result<Self> {
        let fold = |parts: Vec<OpenSetSpec>, join: fn(Box<OpenSetSpec>, Box<OpenSetSpec>) -> OpenSetSpec| {
            let mut it = parts.into_iter();
            let first = it.next().expect("split yields at least one part");
            it.fold(first, |acc, p| join(Box::new(acc), Box::new(p)))
        };
        let unions = s
            .split('|')
            .map(|u| {
                Ok(fold(
                    u.split('&').map(parse_atom).collect::<Result<Vec<_>>>()?,
                    OpenSetSpec::Intersection,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(fold(unions, OpenSetSpec::Union))
    }
}

impl Serialize for OpenSetSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for OpenSetSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Witness rule `r ↦ A_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    /// `A_r = scale · r · direction`.
    Ray { direction: Vec<f64>, scale: f64 },
    /// Centre of the first chain ball `n ≥ start` with
    /// `(1 − q) base^n > r`.
    Chain { base: f64, start: i32, dimension: usize },
}

impl Witness {
    pub fn at(&self, r: f64) -> Vec<f64> {
        match self {
            Witness::Ray { direction, scale } => direction.iter().map(|v| v * scale * r).collect(),
            Witness::Chain { base, start, dimension } => {
                let q = CHAIN_RADIUS_FRACTION;
                let mut n = (*start).max(((r / (1.0 - q)).ln() / base.ln()).floor() as i32 - 1);
                while (1.0 - q) * base.powi(n) <= r {
                    n += 1;
                }
                OpenSetSpec::chain_center(*base, n, *dimension)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatnessCertificate {
    pub kappa: f64,
    pub big_r: f64,
    pub witness: Witness,
    /// Centre `Q` of the balls `B(Q, r)`; empty means the origin.
    pub center: Vec<f64>,
    /// The witness is evaluated at `radius_factor · r`.
    pub radius_factor: f64,
}

impl FatnessCertificate {
    pub fn witness_at(&self, r: f64) -> Vec<f64> {
        self.witness.at(self.radius_factor * r)
    }
}

/// Margin built into catalog certificates so that no check sits on the
/// boundary of its inequality.
const CERTIFICATE_SLACK: f64 = 1.05;

/// Analytic certificate for a catalog domain in `ℝ^d`.
pub fn certificate(spec: &OpenSetSpec, d: usize) -> Result<FatnessCertificate> {
    if d == 0 {
        return Err(domain("dimension must be at least 1"));
    }
    let ray = |sign: f64, scale: f64, kappa: f64, big_r: f64| FatnessCertificate {
        kappa,
        big_r,
        witness: Witness::Ray {
            direction: axis_point(d, sign),
            scale,
        },
        center: vec![],
        radius_factor: 1.0,
    };
    match spec {
        OpenSetSpec::HalfSpace => Ok(ray(1.0, 1.5, 1.0 / 3.0, 1.0)),
        OpenSetSpec::SlabComplement { .. } => Ok(ray(-1.0, 1.5, 1.0 / 3.0, 1.0)),
        OpenSetSpec::ExteriorBall { center, radius } => {
            if center.iter().any(|c| *c != 0.0) {
                return Err(Error::Unsupported(
                    "catalog witness needs an exterior ball centred at 0".into(),
                ));
            }
            // δ(2r e_d) = 2r − ρ ≥ r ≥ 0.4 r for r ≥ ρ
            Ok(ray(1.0, 2.0, 0.4, *radius))
        }
        OpenSetSpec::Cone { aperture } => {
            // δ(2r e_d) = 2r sin(aperture) (or 2r past a right angle)
            let depth = if *aperture >= 0.5 * PI { 1.0 } else { aperture.sin() };
            let kappa = (2.0 * depth).min(0.5) / CERTIFICATE_SLACK;
            Ok(ray(1.0, 2.0, kappa, 1.0))
        }
        OpenSetSpec::BallChain { base, start } => {
            // over one block (1−q)b^{n−1} ≤ r < (1−q)b^n the three
            // inequalities need κ ≤ q/(1−q) and κ < (1−q)/b
            let q = CHAIN_RADIUS_FRACTION;
            let kappa = (q / (1.0 - q)).min((1.0 - q) / base).min(0.5) / CERTIFICATE_SLACK;
            Ok(FatnessCertificate {
                kappa,
                big_r: (1.0 - q) * base.powi(*start),
                witness: Witness::Chain {
                    base: *base,
                    start: *start,
                    dimension: d,
                },
                center: vec![],
                radius_factor: 1.0,
            })
        }
        OpenSetSpec::Ball { .. } | OpenSetSpec::Annulus { .. } => Err(domain("bounded sets are not fat at infinity")),
        _ => Err(Error::Unsupported(
            "no automatic witness for combinator sets; supply a certificate".into(),
        )),
    }
}

/// `A_r` from the catalog certificate of `spec`.
pub fn propose_witness(spec: &OpenSetSpec, d: usize, r: f64) -> Result<(Vec<f64>, FatnessCertificate)> {
    let cert = certificate(spec, d)?;
    if !(r >= cert.big_r) {
        return Err(domain(format!(
            "r = {r} is below the certificate radius {}",
            cert.big_r
        )));
    }
    Ok((cert.witness_at(r), cert))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FatnessViolation {
    pub r: f64,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FatnessReport {
    pub domain: String,
    pub kappa: f64,
    pub big_r: f64,
    pub radii: Vec<f64>,
    pub violations: Vec<FatnessViolation>,
    pub pass: bool,
}

/// Checks, for each `r`, with exact floating-point comparisons:
/// `δ_D(A_r) ≥ κr`, `|A_r − Q| ≥ (1+κ)r` and `|A_r − Q| < r/κ`.
pub fn verify_fatness(spec: &OpenSetSpec, cert: &FatnessCertificate, radii: &[f64]) -> Result<FatnessReport> {
    if let Some(r) = radii.iter().find(|&&r| !(r >= cert.big_r)) {
        return Err(domain(format!(
            "r = {r} is below the certificate radius {}",
            cert.big_r
        )));
    }
    let k = cert.kappa;
    let mut violations = Vec::new();
    let mut push = |r: f64, check: &str, lhs: f64, rhs: f64| {
        violations.push(FatnessViolation {
            r,
            check: check.into(),
            lhs,
            rhs,
        })
    };
    for &r in radii {
        let a = cert.witness_at(r);
        let delta = spec.dist_to_complement(&a);
        let dist = distance(&a, &cert.center);
        if !(delta >= k * r) {
            push(r, "dist_to_complement(A_r) >= kappa r", delta, k * r);
        }
        if !(dist >= (1.0 + k) * r) {
            push(r, "|A_r - Q| >= (1 + kappa) r", dist, (1.0 + k) * r);
        }
        if !(dist < r / k) {
            push(r, "|A_r - Q| < r / kappa", dist, r / k);
        }
    }
    Ok(FatnessReport {
        domain: spec.to_string(),
        kappa: k,
        big_r: cert.big_r,
        radii: radii.to_vec(),
        pass: violations.is_empty(),
        violations,
    })
}

/// Strict two-sided bound `(κ+1)r < |A_r| < r/κ` and disjointness of
/// `B(A_r, κr/2)` and `B(A_{2r/κ}, r)`.
pub fn remark_checks(cert: &FatnessCertificate, radii: &[f64]) -> Vec<FatnessViolation> {
    let k = cert.kappa;
    let mut out = Vec::new();
    for &r in radii {
        let a = cert.witness_at(r);
        let n = distance(&a, &cert.center);
        if !((k + 1.0) * r < n && n < r / k) {
            out.push(FatnessViolation {
                r,
                check: "(kappa + 1) r < |A_r| < r / kappa".into(),
                lhs: n,
                rhs: (k + 1.0) * r,
            });
        }
        let far = cert.witness_at(2.0 * r / k);
        let sep = distance(&a, &far);
        if !(sep > 0.5 * k * r + r) {
            out.push(FatnessViolation {
                r,
                check: "B(A_r, kappa r / 2) and B(A_(2r/kappa), r) disjoint".into(),
                lhs: sep,
                rhs: 0.5 * k * r + r,
            });
        }
    }
    out
}

/// Certificate for balls centred at `Q`: `R_Q = R ∨ |Q|`, `κ/3` and the
/// witness `A_{2r}`.
pub fn recenter_certificate(cert: &FatnessCertificate, q: &[f64]) -> FatnessCertificate {
    FatnessCertificate {
        kappa: cert.kappa / 3.0,
        big_r: cert.big_r.max(norm(q)),
        witness: cert.witness.clone(),
        center: q.to_vec(),
        radius_factor: 2.0 * cert.radius_factor,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbf::log_grid;

    fn p(v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }

    #[test]
    fn membership_examples() {
        assert!(OpenSetSpec::HalfSpace.contains(&p(&[0.0, 0.0, 1.0])));
        assert!(!OpenSetSpec::exterior_ball(1.0).contains(&p(&[0.0, 0.0, 0.0])));
        let chain = OpenSetSpec::ball_chain(2.0, 1).unwrap();
        assert!(chain.contains(&OpenSetSpec::chain_center(2.0, 3, 3)));
        assert!(!chain.contains(&p(&[0.0, 0.0, 6.0])));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(OpenSetSpec::HalfSpace.dist_to_complement(&p(&[0.0, 0.0, 2.0])), 2.0);
        assert_eq!(
            OpenSetSpec::exterior_ball(1.0).dist_to_complement(&p(&[0.0, 3.0, 0.0])),
            2.0
        );
        let chain = OpenSetSpec::ball_chain(2.0, 1).unwrap();
        for n in 1..20 {
            // neighbours: gap to ball n+1 is 2^{n+1} − 2^{n−1} − 2^n ≥ 2^{n−1} > 0
            let gap = 2f64.powi(n + 1) - 2f64.powi(n - 1) - 2f64.powi(n) - 2f64.powi(n - 2);
            assert!(gap > 0.0);
            let c = OpenSetSpec::chain_center(2.0, n, 3);
            assert_eq!(chain.dist_to_complement(&c), 2f64.powi(n - 2));
        }
        let cone = OpenSetSpec::Cone { aperture: 0.5 };
        let x = p(&[0.0, 0.0, 4.0]);
        assert!((cone.dist_to_complement(&x) - 4.0 * 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn parse_round_trip_and_errors() {
        for s in [
            "halfspace",
            "extball:r=1.0",
            "ball:r=2.0,center=0.0;0.0;1.0",
            "chain:base=2.0,start=1",
            "cone:aperture=0.5",
            "slab:width=1.0",
            "annulus:inner=1.0,outer=2.0",
            "halfspace&!ball:r=1.0",
            "ball:r=1.0|extball:r=3.0",
        ] {
            let d: OpenSetSpec = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        assert_eq!(
            "extball:r=1".parse::<OpenSetSpec>().unwrap(),
            OpenSetSpec::exterior_ball(1.0)
        );
        assert!("sphere:r=1".parse::<OpenSetSpec>().is_err());
        assert!("ball".parse::<OpenSetSpec>().is_err());
        assert!("ball:r=-1".parse::<OpenSetSpec>().is_err());
        assert!("chain:base=1.5".parse::<OpenSetSpec>().is_err());
        assert!("extball:radius=1".parse::<OpenSetSpec>().is_err());
    }

    #[test]
    fn combinators() {
        let d: OpenSetSpec = "halfspace&!ball:r=1".parse().unwrap();
        assert!(!d.contains(&p(&[0.0, 0.0, 0.5])));
        assert!(d.contains(&p(&[0.0, 0.0, 1.5])));
        assert!((d.dist_to_complement(&p(&[0.0, 0.0, 1.5])) - 0.5).abs() < 1e-15);
        assert!(!OpenSetSpec::ball(1.0).avoids_ball(0.5));
        assert!(OpenSetSpec::exterior_ball(1.0).avoids_ball(1.0));
    }

    #[test]
    fn witness_examples() {
        let (a, c) = propose_witness(&OpenSetSpec::HalfSpace, 3, 10.0).unwrap();
        assert_eq!(a, p(&[0.0, 0.0, 15.0]));
        assert_eq!(c.kappa, 1.0 / 3.0);
        let (a, c) = propose_witness(&OpenSetSpec::exterior_ball(1.0), 3, 10.0).unwrap();
        assert_eq!(a, p(&[0.0, 0.0, 20.0]));
        assert!(norm(&a) - c.kappa * 10.0 > 10.0 && norm(&a) < 25.0);
        let chain = OpenSetSpec::ball_chain(2.0, 1).unwrap();
        let (a, _) = propose_witness(&chain, 3, 32.0).unwrap();
        assert!(a == OpenSetSpec::chain_center(2.0, 6, 3) || a == OpenSetSpec::chain_center(2.0, 7, 3));
        assert!(propose_witness(&OpenSetSpec::exterior_ball(1.0), 3, 0.5).is_err());
        assert!(matches!(
            propose_witness(&"halfspace&extball:r=1".parse().unwrap(), 3, 2.0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn catalog_certificates_pass_over_six_decades() {
        for s in [
            "halfspace",
            "extball:r=1",
            "cone:aperture=0.5",
            "cone:aperture=2.0",
            "slab",
            "chain:base=2",
            "chain:base=3,start=0",
        ] {
            let spec: OpenSetSpec = s.parse().unwrap();
            let cert = certificate(&spec, 3).unwrap();
            let grid = log_grid(cert.big_r, cert.big_r * 1e6, 16);
            let rep = verify_fatness(&spec, &cert, &grid).unwrap();
            assert!(rep.pass, "{s}: {:?}", rep.violations.first());
            assert!(remark_checks(&cert, &grid).is_empty(), "{s}");
        }
    }

    #[test]
    fn boundary_certificate_fails() {
        let cert = FatnessCertificate {
            kappa: 0.5,
            big_r: 1.0,
            witness: Witness::Ray {
                direction: axis_point(3, 1.0),
                scale: 2.0,
            },
            center: vec![],
            radius_factor: 1.0,
        };
        let rep = verify_fatness(&OpenSetSpec::HalfSpace, &cert, &[1.0, 10.0]).unwrap();
        assert!(!rep.pass);
        assert!(rep.violations.iter().all(|v| v.check == "|A_r - Q| < r / kappa"));
    }

    #[test]
    fn recentering() {
        let cert = certificate(&OpenSetSpec::HalfSpace, 3).unwrap();
        let zero = recenter_certificate(&cert, &[0.0, 0.0, 0.0]);
        assert_eq!(zero.kappa, cert.kappa / 3.0);
        assert!(
            verify_fatness(&OpenSetSpec::HalfSpace, &zero, &log_grid(1.0, 1e6, 8))
                .unwrap()
                .pass
        );
        let q = [0.0, 0.0, 5.0];
        let shifted = recenter_certificate(&cert, &q);
        assert_eq!(shifted.big_r, 5.0);
        assert!(
            verify_fatness(&OpenSetSpec::HalfSpace, &shifted, &log_grid(5.0, 5e6, 8))
                .unwrap()
                .pass
        );
        let ext = certificate(&OpenSetSpec::exterior_ball(2.0), 3).unwrap();
        let on_sphere = recenter_certificate(&ext, &[2.0, 0.0, 0.0]);
        assert_eq!(on_sphere.big_r, 2.0);
        assert!(
            verify_fatness(&OpenSetSpec::exterior_ball(2.0), &on_sphere, &log_grid(2.0, 2e6, 8))
                .unwrap()
                .pass
        );
    }
}
