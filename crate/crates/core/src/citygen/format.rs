//! `cityv1` text serialization.
//!
//! ```text
//! cityv1 <side_m> <block_m>
//! I <id> <x> <y>
//! S <id> <a> <b> <dir>      dir: 2W | AB | BA | XA | XB
//! L <id> <x> <y>
//! ```
//!
//! `XA`/`XB` mark dead ends closed at endpoint `a`/`b`. Numbers are printed
//! with three decimals.

use std::fmt::Write as _;

use nalgebra::Vector2;

use super::{CityMap, Directionality, Intersection, Landmark, RoadSegment};
use crate::{Error, Result};

const MAGIC: &str = "cityv1";

pub fn write_city(map: &CityMap) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {:.3} {:.3}", map.side_m, map.block_m);
    for n in &map.intersections {
        let _ = writeln!(out, "I {} {:.3} {:.3}", n.id, n.x, n.y);
    }
    for s in &map.segments {
        let _ = writeln!(out, "S {} {} {} {}", s.id, s.a, s.b, s.dir.token());
    }
    for l in &map.landmarks {
        let _ = writeln!(out, "L {} {:.3} {:.3}", l.id, l.position.x, l.position.y);
    }
    out
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(parts: &[&str], i: usize, line: usize) -> Result<T> {
    let raw = parts
        .get(i)
        .ok_or_else(|| err(line, format!("missing field {i}")))?;
    raw.parse()
        .map_err(|_| err(line, format!("cannot parse field {i} (`{raw}`)")))
}

pub fn parse_city(text: &str) -> Result<CityMap> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty input"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.first() != Some(&MAGIC) || head.len() != 3 {
        return Err(err(1, format!("expected `{MAGIC} <side_m> <block_m>`")));
    }
    let side_m: f64 = field(&head, 1, 1)?;
    let block_m: f64 = field(&head, 2, 1)?;

    let mut intersections = Vec::new();
    let mut segments = Vec::new();
    let mut landmarks = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let parts: Vec<&str> = raw.split_whitespace().collect();
        let expect = |n: usize| {
            if parts.len() == n {
                Ok(())
            } else {
                Err(err(line, format!("expected {n} fields, found {}", parts.len())))
            }
        };
        match parts[0] {
            "I" => {
                expect(4)?;
                let id: usize = field(&parts, 1, line)?;
                if id != intersections.len() {
                    return Err(err(line, "intersection ids must be consecutive"));
                }
                intersections.push(Intersection {
                    id,
                    x: field(&parts, 2, line)?,
                    y: field(&parts, 3, line)?,
                });
            }
            "S" => {
                expect(5)?;
                let id: usize = field(&parts, 1, line)?;
                if id != segments.len() {
                    return Err(err(line, "segment ids must be consecutive"));
                }
                let dir = Directionality::from_token(parts[4])
                    .ok_or_else(|| err(line, format!("unknown direction `{}`", parts[4])))?;
                segments.push(RoadSegment {
                    id,
                    a: field(&parts, 2, line)?,
                    b: field(&parts, 3, line)?,
                    dir,
                });
            }
            "L" => {
                expect(4)?;
                landmarks.push(Landmark {
                    id: field(&parts, 1, line)?,
                    position: Vector2::new(field(&parts, 2, line)?, field(&parts, 3, line)?),
                });
            }
            other => return Err(err(line, format!("unknown record `{other}`"))),
        }
    }

    let per_side = (intersections.len() as f64).sqrt().round() as usize;
    if per_side < 3 || per_side * per_side != intersections.len() {
        return Err(err(0, "intersections do not form a square lattice"));
    }
    let blocks = per_side - 1;
    for n in &intersections {
        let (i, j) = (n.id % per_side, n.id / per_side);
        if (n.x - i as f64 * block_m).abs() > 1e-3 || (n.y - j as f64 * block_m).abs() > 1e-3 {
            return Err(err(0, format!("intersection {} is off the lattice", n.id)));
        }
    }
    if segments.iter().any(|s| s.a >= intersections.len() || s.b >= intersections.len()) {
        return Err(err(0, "segment references an unknown intersection"));
    }
    let mut map = CityMap {
        side_m,
        block_m,
        blocks,
        intersections,
        segments,
        landmarks,
        links: Vec::new(),
    };
    map.rebuild_links()?;
    Ok(map)
}
