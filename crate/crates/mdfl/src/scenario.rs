//! Scenario files: the one documented schema for environments and runs.
//!
//! A scenario is a TOML document with the reflecting surfaces, node
//! positions, link set, shadowing-model parameters, maximum reflection order,
//! evaluation grid, seed, and (optionally) signal-level channel settings.
//! Example:
//!
//! ```toml
//! seed = 1
//! max_order = 1
//!
//! [model]
//! phi_db = -2.5
//! kappa_m = 0.05
//! sigma_db = 1.5
//!
//! [grid]
//! x_min = -11.5
//! x_max = 11.5
//! y_min = -7.75
//! y_max = 7.75
//! step = 0.1
//!
//! [links]
//! mode = "full-mesh"   # or "explicit" with pairs = [[0, 1], ...]
//! directed = false
//!
//! [[surfaces]]
//! id = "s1"
//! a = [-11.5, -7.75]
//! b = [11.5, -7.75]
//!
//! [[nodes]]
//! position = [4.0, 0.0]
//! ```
//!
//! Positions are meters; the link set excludes self-links. With
//! `directed = false` (the default) each unordered node pair appears once:
//! reciprocal links carry identical geometry and would double-count
//! information.

use serde::{Deserialize, Serialize};

use crate::crlb::GridSpec;
use crate::error::{Error, Result};
use crate::geometry::{Environment, Link, Point, Surface};
use crate::measurement::ShadowingParams;

/// Signal-level settings used by channel initialization and association.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    /// Occupied two-sided bandwidth of the ranging pulse, Hz.
    pub bandwidth_hz: f64,
    pub rolloff: f64,
    pub sample_rate_hz: f64,
    /// Received-signal window length, seconds.
    pub symbol_duration_s: f64,
    /// Idle observation period, seconds.
    pub t_ini_s: f64,
    /// Interval between consecutive snapshots, seconds.
    pub t_g_s: f64,
    /// Per-sample complex noise variance, signal-power units.
    pub noise_variance: f64,
    /// Amplitude scaling per bounce for synthetic idle channels.
    pub reflection_coeff: f64,
    pub max_components: usize,
    /// Detection margin above the peak noise level, dB.
    pub detection_margin_db: f64,
    /// Association cut-off, meters; defaults to one ranging resolution
    /// cell `c / bandwidth` when absent.
    pub cutoff_m: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            bandwidth_hz: 500e6,
            rolloff: 0.5,
            sample_rate_hz: 2e9,
            symbol_duration_s: 250e-9,
            t_ini_s: 0.2,
            t_g_s: 0.01,
            noise_variance: 2.5e3,
            reflection_coeff: 0.7,
            max_components: 12,
            detection_margin_db: 6.0,
            cutoff_m: None,
        }
    }
}

impl ChannelConfig {
    /// Association cut-off: configured value or one resolution cell.
    pub fn cutoff_m(&self) -> f64 {
        self.cutoff_m
            .unwrap_or(crate::SPEED_OF_LIGHT / self.bandwidth_hz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceBlock {
    id: String,
    a: [f64; 2],
    b: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeBlock {
    position: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinksBlock {
    mode: String,
    #[serde(default)]
    directed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    seed: u64,
    max_order: usize,
    model: ShadowingParams,
    grid: GridSpec,
    links: LinksBlock,
    #[serde(default)]
    channel: ChannelConfig,
    surfaces: Vec<SurfaceBlock>,
    nodes: Vec<NodeBlock>,
}

/// A validated scenario: environment, nodes, expanded link set and settings.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub max_order: usize,
    pub params: ShadowingParams,
    pub grid: GridSpec,
    pub channel: ChannelConfig,
    pub environment: Environment,
    pub nodes: Vec<Point>,
    pub links: Vec<Link>,
    file: ScenarioFile,
}

impl Scenario {
    /// Assembles and validates a scenario from its parts.
    pub fn assemble(
        seed: u64,
        max_order: usize,
        params: ShadowingParams,
        grid: GridSpec,
        channel: ChannelConfig,
        surfaces: Vec<Surface>,
        nodes: Vec<Point>,
        directed: bool,
    ) -> Result<Scenario> {
        let file = ScenarioFile {
            seed,
            max_order,
            model: params,
            grid,
            links: LinksBlock {
                mode: "full-mesh".to_string(),
                directed,
                pairs: None,
            },
            channel,
            surfaces: surfaces
                .iter()
                .map(|s| SurfaceBlock { id: s.id.clone(), a: [s.a.x, s.a.y], b: [s.b.x, s.b.y] })
                .collect(),
            nodes: nodes.iter().map(|p| NodeBlock { position: [p.x, p.y] }).collect(),
        };
        Scenario::from_file(file)
    }

    fn from_file(file: ScenarioFile) -> Result<Scenario> {
        ShadowingParams::new(file.model.phi_db, file.model.kappa_m, file.model.sigma_db)?;
        let grid = GridSpec::new(
            file.grid.x_min,
            file.grid.x_max,
            file.grid.y_min,
            file.grid.y_max,
            file.grid.step,
        )?;

        let mut surfaces = Vec::with_capacity(file.surfaces.len());
        for s in &file.surfaces {
            surfaces.push(Surface::new(
                s.id.clone(),
                Point::new(s.a[0], s.a[1]),
                Point::new(s.b[0], s.b[1]),
            )?);
        }
        let environment = Environment::new(surfaces)?;

        let nodes: Vec<Point> = file
            .nodes
            .iter()
            .map(|n| Point::new(n.position[0], n.position[1]))
            .collect();
        if nodes.iter().any(|p| !p.is_finite()) {
            return Err(Error::scenario("non-finite node position".to_string()));
        }

        let links = expand_links(&file.links, &nodes)?;

        Ok(Scenario {
            seed: file.seed,
            max_order: file.max_order,
            params: file.model,
            grid,
            channel: file.channel,
            environment,
            nodes,
            links,
            file,
        })
    }

    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::scenario(e.to_string()))?;
        Scenario::from_file(file)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(&self.file).map_err(|e| Error::scenario(e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)?;
        Scenario::from_toml_str(&text)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }

    /// Scenario with the node set replaced (links re-expanded, same mode).
    pub fn with_nodes(&self, nodes: Vec<Point>) -> Result<Scenario> {
        let mut file = self.file.clone();
        file.nodes = nodes.iter().map(|p| NodeBlock { position: [p.x, p.y] }).collect();
        if file.links.mode == "explicit" {
            return Err(Error::scenario(
                "cannot replace nodes of a scenario with explicit links",
            ));
        }
        Scenario::from_file(file)
    }

    /// Scenario restricted to the first `n` surfaces in id order.
    pub fn with_surface_prefix(&self, n: usize) -> Result<Scenario> {
        let mut file = self.file.clone();
        let env = self.environment.prefix(n);
        file.surfaces = env
            .surfaces()
            .iter()
            .map(|s| SurfaceBlock { id: s.id.clone(), a: [s.a.x, s.a.y], b: [s.b.x, s.b.y] })
            .collect();
        Scenario::from_file(file)
    }
}

fn expand_links(block: &LinksBlock, nodes: &[Point]) -> Result<Vec<Link>> {
    let n = nodes.len();
    let mut links = Vec::new();
    match block.mode.as_str() {
        "full-mesh" => {
            if block.pairs.is_some() {
                return Err(Error::scenario("full-mesh link mode does not take pairs"));
            }
            if block.directed {
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            links.push(Link::new(links.len(), i, j, nodes[i], nodes[j]));
                        }
                    }
                }
            } else {
                for i in 0..n {
                    for j in (i + 1)..n {
                        links.push(Link::new(links.len(), i, j, nodes[i], nodes[j]));
                    }
                }
            }
        }
        "explicit" => {
            let pairs = block
                .pairs
                .as_ref()
                .ok_or_else(|| Error::scenario("explicit link mode requires pairs"))?;
            for &[i, j] in pairs {
                if i >= n || j >= n {
                    return Err(Error::scenario(format!(
                        "link pair ({i},{j}) references a missing node"
                    )));
                }
                if i == j {
                    return Err(Error::scenario("self-links are excluded"));
                }
                links.push(Link::new(links.len(), i, j, nodes[i], nodes[j]));
            }
        }
        other => {
            return Err(Error::scenario(format!("unknown link mode `{other}`")));
        }
    }
    Ok(links)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 7
max_order = 1

[model]
phi_db = -2.5
kappa_m = 0.05
sigma_db = 1.5

[grid]
x_min = -1.0
x_max = 1.0
y_min = -1.0
y_max = 1.0
step = 0.5

[links]
mode = "full-mesh"

[[surfaces]]
id = "s1"
a = [-2.0, 2.0]
b = [2.0, 2.0]

[[nodes]]
position = [1.0, 0.0]

[[nodes]]
position = [-1.0, 0.0]

[[nodes]]
position = [0.0, 1.0]
"#;

    #[test]
    fn parses_and_expands_full_mesh() {
        let sc = Scenario::from_toml_str(MINIMAL).unwrap();
        assert_eq!(sc.nodes.len(), 3);
        assert_eq!(sc.links.len(), 3); // undirected full mesh of 3 nodes
        assert_eq!(sc.environment.len(), 1);
        assert_eq!(sc.channel, ChannelConfig::default());
        assert_eq!(sc.channel.cutoff_m(), crate::SPEED_OF_LIGHT / 500e6);
    }

    #[test]
    fn round_trips_through_the_parser() {
        let sc = Scenario::from_toml_str(MINIMAL).unwrap();
        let text = sc.to_toml_string().unwrap();
        let again = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(text, again.to_toml_string().unwrap());
    }

    #[test]
    fn directed_mesh_doubles_links() {
        let text = MINIMAL.replace("mode = \"full-mesh\"", "mode = \"full-mesh\"\ndirected = true");
        let sc = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(sc.links.len(), 6);
    }

    #[test]
    fn explicit_pairs_and_self_link_rejection() {
        let text = MINIMAL.replace(
            "mode = \"full-mesh\"",
            "mode = \"explicit\"\npairs = [[0, 1], [2, 0]]",
        );
        let sc = Scenario::from_toml_str(&text).unwrap();
        assert_eq!(sc.links.len(), 2);
        assert_eq!((sc.links[1].tx_index, sc.links[1].rx_index), (2, 0));

        let bad = MINIMAL.replace(
            "mode = \"full-mesh\"",
            "mode = \"explicit\"\npairs = [[1, 1]]",
        );
        assert!(Scenario::from_toml_str(&bad).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = format!("{MINIMAL}\nbogus = 1\n");
        assert!(Scenario::from_toml_str(&text).is_err());
    }

    #[test]
    fn surface_prefix_restricts_environment() {
        let sc = Scenario::from_toml_str(MINIMAL).unwrap();
        let none = sc.with_surface_prefix(0).unwrap();
        assert_eq!(none.environment.len(), 0);
    }
}
