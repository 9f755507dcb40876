//! Line-oriented instance files.
//!
//! ```text
//! wrsn-instance v1 p2 n=50 seed=7 alpha=0.2 eps=0 t0=0 area_x0=0 area_y0=0 area_x1=1000 area_y1=1000
//! charger depot_x=500 depot_y=500 end_x=500 end_y=500 speed=5 rc=40 xi=600 ie=300000
//! node id=0 x=12.5 y=99.25 B=10800 B0=950.5 beta=1
//! wp id=3 t=0 x=10 y=20
//! ```
//!
//! Keys are order-insensitive within a line; optional node keys are `r`
//! (sensing radius), `D` (deadline), `pi` (prize), `vmax` (trace speed
//! bound). `wp` lines list trajectory waypoints in time order.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{Charger, MobilityTrace, ProblemInstance, SensorNode, Variant};
use crate::point::{Point, Rect};
use crate::{Error, Result};

pub fn save_instance(instance: &ProblemInstance, path: &Path) -> Result<()> {
    fs::write(path, write_instance(instance))?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let text = fs::read_to_string(path)?;
    load_instance_str(&text)
}

/// Render an instance in the documented file format.
pub fn write_instance(instance: &ProblemInstance) -> String {
    let mut out = String::new();
    let a = &instance.area;
    out.push_str(&format!(
        "wrsn-instance v1 {} n={} seed={} alpha={} eps={} t0={} area_x0={} area_y0={} area_x1={} area_y1={}",
        instance.variant.tag(),
        instance.n(),
        instance.rng_seed,
        instance.alpha,
        instance.epsilon_charge,
        instance.t0,
        a.x0, a.y0, a.x1, a.y1,
    ));
    if let Some(k) = instance.coverage_k {
        out.push_str(&format!(" k={k}"));
    }
    out.push('\n');

    let c = &instance.charger;
    out.push_str(&format!(
        "charger depot_x={} depot_y={} end_x={} end_y={} speed={} rc={} xi={}",
        c.depot.x, c.depot.y, c.end_point.x, c.end_point.y, c.speed, c.transfer_rate, c.travel_energy,
    ));
    if let Some(ie) = c.energy_capacity {
        out.push_str(&format!(" ie={ie}"));
    }
    if let Some(ts) = c.timespan {
        out.push_str(&format!(" c={ts}"));
    }
    out.push('\n');

    for node in &instance.nodes {
        out.push_str(&format!(
            "node id={} x={} y={} B={} B0={} beta={}",
            node.id,
            node.position.x,
            node.position.y,
            node.battery_capacity,
            node.residual,
            node.consumption_rate,
        ));
        if let Some(r) = node.sensing_radius {
            out.push_str(&format!(" r={r}"));
        }
        if let Some(d) = node.deadline {
            out.push_str(&format!(" D={d}"));
        }
        if let Some(p) = node.prize {
            out.push_str(&format!(" pi={p}"));
        }
        if let Some(trace) = &node.trajectory {
            out.push_str(&format!(" vmax={}", trace.max_speed));
        }
        out.push('\n');
    }
    for node in &instance.nodes {
        if let Some(trace) = &node.trajectory {
            for (t, p) in &trace.waypoints {
                out.push_str(&format!("wp id={} t={} x={} y={}\n", node.id, t, p.x, p.y));
            }
        }
    }
    out
}

struct LineKv {
    line_no: usize,
    map: HashMap<String, String>,
}

impl LineKv {
    fn parse(line_no: usize, tokens: &[&str]) -> Result<Self> {
        let mut map = HashMap::new();
        for tok in tokens {
            let (key, value) = tok.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected key=value, got `{tok}`"),
            })?;
            map.insert(key.to_string(), value.to_string());
        }
        Ok(LineKv { line_no, map })
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.map
            .get(key)
            .ok_or_else(|| Error::Parse {
                line: self.line_no,
                msg: format!("missing field `{key}`"),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                line: self.line_no,
                msg: format!("field `{key}` is not a number"),
            })
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        match self.map.get(key) {
            None => Ok(None),
            Some(_) => self.f64(key).map(Some),
        }
    }

    fn u64(&self, key: &str) -> Result<u64> {
        self.map
            .get(key)
            .ok_or_else(|| Error::Parse {
                line: self.line_no,
                msg: format!("missing field `{key}`"),
            })?
            .parse()
            .map_err(|_| Error::Parse {
                line: self.line_no,
                msg: format!("field `{key}` is not an integer"),
            })
    }
}

/// Parse an instance from file text, enforcing all model invariants.
pub fn load_instance_str(text: &str) -> Result<ProblemInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_no, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 3 || tokens[0] != "wrsn-instance" || tokens[1] != "v1" {
        return Err(Error::Parse {
            line: header_no,
            msg: "expected header `wrsn-instance v1 <variant> ...`".into(),
        });
    }
    let variant = Variant::from_tag(tokens[2]).map_err(|e| Error::Parse {
        line: header_no,
        msg: e.to_string(),
    })?;
    let kv = LineKv::parse(header_no, &tokens[3..])?;
    let n = kv.u64("n")? as usize;
    let seed = kv.u64("seed")?;
    let alpha = kv.f64("alpha")?;
    let eps = kv.f64_opt("eps")?.unwrap_or(0.0);
    let t0 = kv.f64_opt("t0")?.unwrap_or(0.0);
    let area = Rect::new(
        kv.f64("area_x0")?,
        kv.f64("area_y0")?,
        kv.f64("area_x1")?,
        kv.f64("area_y1")?,
    );
    let coverage_k = match kv.map.get("k") {
        Some(_) => Some(kv.u64("k")? as u32),
        None => None,
    };

    let (charger_no, charger_line) = lines.next().ok_or(Error::Parse {
        line: header_no + 1,
        msg: "missing charger line".into(),
    })?;
    let ctokens: Vec<&str> = charger_line.split_whitespace().collect();
    if ctokens.first() != Some(&"charger") {
        return Err(Error::Parse {
            line: charger_no,
            msg: "expected `charger ...` line".into(),
        });
    }
    let ckv = LineKv::parse(charger_no, &ctokens[1..])?;
    let charger = Charger {
        depot: Point::new(ckv.f64("depot_x")?, ckv.f64("depot_y")?),
        end_point: Point::new(ckv.f64("end_x")?, ckv.f64("end_y")?),
        speed: ckv.f64("speed")?,
        transfer_rate: ckv.f64("rc")?,
        travel_energy: ckv.f64("xi")?,
        energy_capacity: ckv.f64_opt("ie")?,
        timespan: ckv.f64_opt("c")?,
    };

    let mut nodes: Vec<SensorNode> = Vec::with_capacity(n);
    let mut vmax: HashMap<usize, f64> = HashMap::new();
    let mut waypoints: HashMap<usize, Vec<(f64, Point)>> = HashMap::new();
    let mut last_line = charger_no;
    for (line_no, line) in lines {
        last_line = line_no;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.first().copied() {
            Some("node") => {
                let kv = LineKv::parse(line_no, &tokens[1..])?;
                let id = kv.u64("id")? as usize;
                let node = SensorNode {
                    id,
                    position: Point::new(kv.f64("x")?, kv.f64("y")?),
                    battery_capacity: kv.f64("B")?,
                    residual: kv.f64("B0")?,
                    consumption_rate: kv.f64("beta")?,
                    sensing_radius: kv.f64_opt("r")?,
                    deadline: kv.f64_opt("D")?,
                    prize: match kv.map.get("pi") {
                        Some(_) => Some(kv.u64("pi")? as u32),
                        None => None,
                    },
                    trajectory: None,
                };
                if let Some(v) = kv.f64_opt("vmax")? {
                    vmax.insert(id, v);
                }
                nodes.push(node);
            }
            Some("wp") => {
                let kv = LineKv::parse(line_no, &tokens[1..])?;
                let id = kv.u64("id")? as usize;
                waypoints
                    .entry(id)
                    .or_default()
                    .push((kv.f64("t")?, Point::new(kv.f64("x")?, kv.f64("y")?)));
            }
            Some(other) => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown record `{other}`"),
                })
            }
            None => unreachable!("blank lines filtered"),
        }
    }

    if nodes.len() != n {
        return Err(Error::Parse {
            line: last_line,
            msg: format!("header declares n={n} nodes, found {}", nodes.len()),
        });
    }
    nodes.sort_by_key(|node| node.id);
    for node in &mut nodes {
        if let Some(points) = waypoints.remove(&node.id) {
            let max_speed = vmax.get(&node.id).copied().unwrap_or_else(|| {
                points
                    .windows(2)
                    .map(|w| w[0].1.distance(w[1].1) / (w[1].0 - w[0].0))
                    .fold(0.0_f64, f64::max)
            });
            node.trajectory = Some(MobilityTrace {
                waypoints: points,
                max_speed,
            });
        }
    }
    if let Some(id) = waypoints.keys().next() {
        return Err(Error::Parse {
            line: last_line,
            msg: format!("waypoints reference unknown node id {id}"),
        });
    }

    let instance = ProblemInstance {
        variant,
        nodes,
        charger,
        alpha,
        epsilon_charge: eps,
        coverage_k,
        area,
        t0,
        rng_seed: seed,
    };
    instance.validate()?;
    Ok(instance)
}
