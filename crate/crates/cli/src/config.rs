//! `evolve` run files: flat `section.key = value` lines or the equivalent
//! nested JSON object. Both forms are merged over the built-in defaults and
//! every supplied key must name a real setting.

use crate::CliError;
use llg_core::evolve::{InitialData, ShootingSpec, SimConfig};
use llg_core::PhysParams;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// evolve the initial data as given
    Run,
    /// tune the background phase first, then evolve
    Shoot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub mode: Mode,
    pub sim: SimConfig,
    pub init: InitialData,
    pub shoot: ShootingSpec,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        let spec = ShootingSpec::default();
        Self {
            mode: Mode::Run,
            sim: SimConfig::blowup(PhysParams::heat_flow()),
            init: InitialData::BubbleInField { lambda: spec.lambda, tilt: spec.tilt, phase: 0.0 },
            shoot: spec,
        }
    }
}

fn parse_scalar(raw: &str) -> Value {
    let raw = raw.trim();
    match serde_json::from_str::<Value>(raw) {
        Ok(v) => v,
        Err(_) => Value::String(raw.trim_matches('"').to_string()),
    }
}

/// Reads `a.b.c = value` lines into a nested object. `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Value, CliError> {
    let mut root = Map::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", ln + 1)))?;
        let parts: Vec<&str> = key.trim().split('.').map(str::trim).collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(CliError::Config(format!("line {}: malformed key '{}'", ln + 1, key.trim())));
        }
        let mut node = &mut root;
        for p in &parts[..parts.len() - 1] {
            let entry = node.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
            node = entry
                .as_object_mut()
                .ok_or_else(|| CliError::Config(format!("line {}: '{p}' is both a value and a section", ln + 1)))?;
        }
        let last = parts[parts.len() - 1].to_string();
        if node.insert(last, parse_scalar(val)).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key '{}'", ln + 1, key.trim())));
        }
    }
    Ok(Value::Object(root))
}

fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// Dotted paths of every leaf in `v`.
fn leaf_paths(v: &Value, prefix: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaf_paths(x, &p, out);
            }
        }
        _ => out.push(prefix.to_string()),
    }
}

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(v, |node, k| node.get(k))
}

impl EvolveConfig {
    /// Parses JSON when the text starts with `{`, key = value lines otherwise.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let user = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?
        } else {
            parse_key_values(text)?
        };
        let mut tree = serde_json::to_value(Self::default()).expect("defaults serialize");
        // a different initial-data kind replaces the default block
        if let Some(init) = user.get("init") {
            if init.get("kind").is_some() {
                tree["init"] = Value::Object(Map::new());
            }
        }
        merge(&mut tree, &user);
        let cfg: Self = serde_json::from_value(tree).map_err(|e| CliError::Config(e.to_string()))?;
        let back = serde_json::to_value(&cfg).expect("config serializes");
        let mut paths = Vec::new();
        leaf_paths(&user, "", &mut paths);
        for p in paths {
            if lookup(&back, &p).is_none() {
                return Err(CliError::Config(format!("unknown setting '{p}'")));
            }
        }
        Ok(cfg)
    }

    /// The flat key = value form of this configuration.
    pub fn to_key_values(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut paths = Vec::new();
        leaf_paths(&v, "", &mut paths);
        paths.iter().map(|p| format!("{p} = {}\n", lookup(&v, p).expect("path exists"))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use llg_core::evolve::{DtPolicy, Integrator};

    #[test]
    fn key_values_override_defaults() {
        let text = "mode = shoot\n# comment\nsim.pp.a = 0.8\nsim.pp.b = 0.6\nsim.mesh.intervals = 300 # inline\n\
                    sim.integrator = rk4\nshoot.bracket = [-1, 1]\n";
        let c = EvolveConfig::parse(text).unwrap();
        assert_eq!(c.mode, Mode::Shoot);
        assert!((c.sim.pp.b() - 0.6).abs() < 1e-15);
        assert_eq!(c.sim.mesh.intervals, 300);
        assert_eq!(c.sim.integrator, Integrator::Rk4);
        assert_eq!(c.shoot.bracket, [-1.0, 1.0]);
        assert_eq!(c.sim.lambda_stop, EvolveConfig::default().sim.lambda_stop);
    }

    #[test]
    fn physics_is_normalized() {
        let c = EvolveConfig::parse("sim.pp.a = 3\nsim.pp.b = 4\n").unwrap();
        assert!((c.sim.pp.a() - 0.6).abs() < 1e-15 && (c.sim.pp.b() - 0.8).abs() < 1e-15);
        assert!(EvolveConfig::parse("sim.pp.a = -1\n").is_err());
    }

    #[test]
    fn json_and_key_values_agree() {
        let kv = "sim.dt.kind = fixed\nsim.dt.dt = 0.001\ninit.kind = bubble\ninit.lambda = 0.5\ninit.gamma = 0.1\n";
        let js = r#"{"sim": {"dt": {"kind": "fixed", "dt": 0.001}}, "init": {"kind": "bubble", "lambda": 0.5, "gamma": 0.1}}"#;
        let a = EvolveConfig::parse(kv).unwrap();
        assert_eq!(a, EvolveConfig::parse(js).unwrap());
        assert_eq!(a.sim.dt, DtPolicy::Fixed { dt: 1e-3 });
        assert_eq!(a.init, InitialData::Bubble { lambda: 0.5, gamma: 0.1 });
    }

    #[test]
    fn round_trip_through_key_values() {
        let c = EvolveConfig::default();
        assert_eq!(EvolveConfig::parse(&c.to_key_values()).unwrap(), c);
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        assert!(EvolveConfig::parse("sim.mesh.cores = 1\n").is_err());
        assert!(EvolveConfig::parse("init.tilt = 1\ninit.kind = bubble\ninit.lambda = 1\ninit.gamma = 0\n").is_err());
        assert!(EvolveConfig::parse("sim..a = 1\n").is_err());
        assert!(EvolveConfig::parse("no equals sign\n").is_err());
        assert!(EvolveConfig::parse("mode = run\nmode = shoot\n").is_err());
    }
}
