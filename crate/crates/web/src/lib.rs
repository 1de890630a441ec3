//! WebAssembly bindings for the browser demo in `www/`.
//!
//! A [`Demo`] holds one dataset and walks it through three operations:
//! building the k-NN graph with its metrics, Louvain clustering, and an
//! incremental ForceAtlas2 layout that the page animates frame by frame.
//! Results cross the boundary as JSON strings or flat `f64` arrays.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use simnet_core::communities::{louvain, Weighting};
use simnet_core::ingest::{FeatureMatrix, ImageRecord};
use simnet_core::layout::{init_positions, step, Fa2Params, LayoutState};
use simnet_core::netmetrics::{metrics_report, NetworkMetrics};
use simnet_core::simnet::{build_image_graph, k_for, KnnParams, SimilarityGraph, Topology};
use simnet_core::synth::{generate, FixtureSpec};

#[derive(Serialize)]
struct GraphView<'a> {
    k: usize,
    nodes: usize,
    /// `[u, v, weight]` triples.
    edges: Vec<(usize, usize, f64)>,
    countries: Vec<&'a str>,
    metrics: NetworkMetrics,
}

#[derive(Serialize)]
struct ClusterView {
    assignment: Vec<usize>,
    n_communities: usize,
    modularity: Option<f64>,
    sizes: Vec<usize>,
}

#[wasm_bindgen]
pub struct Demo {
    matrix: FeatureMatrix,
    records: Vec<ImageRecord>,
    graph: Option<SimilarityGraph>,
    layout: Option<LayoutState>,
    params: Fa2Params,
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

impl Demo {
    fn from_parts(matrix: FeatureMatrix, records: Vec<ImageRecord>) -> Self {
        Demo {
            matrix,
            records,
            graph: None,
            layout: None,
            params: Fa2Params::default(),
        }
    }

    /// Raw vectors, `dim` values per image, all in one country.
    pub fn from_vectors(dim: usize, data: Vec<f32>) -> Result<Self, String> {
        let matrix = FeatureMatrix::new(dim, data).map_err(|e| e.to_string())?;
        let records = (0..matrix.count())
            .map(|row| ImageRecord {
                image_id: format!("img-{row}"),
                account_id: None,
                country: "all".into(),
                row,
            })
            .collect();
        Ok(Self::from_parts(matrix, records))
    }

    /// Small synthetic dataset: four countries with planted near-duplicate
    /// groups on a random background.
    pub fn synthetic(per_country: usize, seed: u64) -> Result<Self, String> {
        let spec = FixtureSpec {
            images_per_country: per_country,
            dim: 16,
            groups_per_country: 3,
            group_size: 8,
            cross_groups: 1,
            cross_members_per_country: 2,
            accounts_per_country: 6,
            group_noise: 0.05,
            seed,
            ..FixtureSpec::default()
        };
        let planted = spec.groups_per_country * spec.group_size + spec.cross_groups * spec.cross_members_per_country;
        if per_country < planted {
            return Err(format!("need at least {planted} images per country"));
        }
        let fixture = generate(&spec);
        Ok(Self::from_parts(fixture.dataset.matrix, fixture.dataset.records))
    }

    pub fn build(&mut self, k: Option<usize>, max_distance: Option<f64>) -> Result<String, String> {
        let n = self.matrix.count();
        let k = match k {
            Some(k) => k,
            None => k_for(n).map_err(|e| e.to_string())?,
        };
        let graph = build_image_graph(&self.matrix, &KnnParams { k, max_distance }).map_err(|e| e.to_string())?;
        let view = GraphView {
            k,
            nodes: n,
            edges: graph.edges().iter().map(|e| (e.u, e.v, e.weight)).collect(),
            countries: self.records.iter().map(|r| r.country.as_str()).collect(),
            metrics: metrics_report(&graph),
        };
        self.graph = Some(graph);
        self.layout = None;
        Ok(serde_json::to_string(&view).expect("view serializes"))
    }

    fn graph(&self) -> Result<&SimilarityGraph, String> {
        self.graph.as_ref().ok_or_else(|| "build the graph first".to_string())
    }

    pub fn cluster(&self, seed: u64, weighted: bool) -> Result<String, String> {
        let graph = self.graph()?;
        let weighting = if weighted {
            Weighting::Weighted
        } else {
            Weighting::Unweighted
        };
        let view = if graph.edge_count() == 0 {
            let n = graph.node_count();
            ClusterView {
                assignment: (0..n).collect(),
                n_communities: n,
                modularity: None,
                sizes: vec![1; n],
            }
        } else {
            let p = louvain(graph, seed, weighting).map_err(|e| e.to_string())?;
            ClusterView {
                sizes: p.community_sizes(),
                assignment: p.assignment,
                n_communities: p.n_communities,
                modularity: Some(p.modularity),
            }
        };
        Ok(serde_json::to_string(&view).expect("view serializes"))
    }

    pub fn start_layout(&mut self, seed: u64, gravity: f64, scaling: f64, linlog: bool) -> Result<(), String> {
        let n = self.graph()?.node_count();
        let params = Fa2Params {
            seed,
            gravity,
            scaling,
            linlog,
            barnes_hut: (n > 2000).then_some(simnet_core::layout::DEFAULT_THETA),
            ..Fa2Params::default()
        };
        params.validate().map_err(|e| e.to_string())?;
        self.layout = Some(init_positions(n, seed));
        self.params = params;
        Ok(())
    }

    /// Advances the layout and returns positions as `[x0, y0, x1, y1, ...]`.
    pub fn advance(&mut self, iterations: usize) -> Result<Vec<f64>, String> {
        let graph = self.graph.as_ref().ok_or("build the graph first")?;
        let mut state = self.layout.take().ok_or("start the layout first")?;
        for _ in 0..iterations {
            match step(graph, &state, &self.params) {
                Ok(next) => state = next,
                Err(e) => {
                    self.layout = Some(state);
                    return Err(e.to_string());
                }
            }
        }
        let flat = state.positions.iter().flat_map(|p| [p[0], p[1]]).collect();
        self.layout = Some(state);
        Ok(flat)
    }

    pub fn iteration(&self) -> usize {
        self.layout.as_ref().map_or(0, |s| s.iteration)
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Demo, JsError> {
        Demo::from_vectors(dim, data).map_err(js_err)
    }

    #[wasm_bindgen(js_name = synthetic)]
    pub fn js_synthetic(per_country: usize, seed: u32) -> Result<Demo, JsError> {
        Demo::synthetic(per_country, seed.into()).map_err(js_err)
    }

    #[wasm_bindgen(getter)]
    pub fn len(&self) -> usize {
        self.matrix.count()
    }

    #[wasm_bindgen(getter, js_name = isEmpty)]
    pub fn is_empty(&self) -> bool {
        self.matrix.count() == 0
    }

    /// Builds the k-NN graph; `k <= 0` uses `floor(ln N)` and a
    /// non-positive `max_distance` disables the distance filter.
    /// Returns `{k, nodes, edges, countries, metrics}` as JSON.
    #[wasm_bindgen(js_name = buildGraph)]
    pub fn js_build(&mut self, k: i32, max_distance: f64) -> Result<String, JsError> {
        let k = usize::try_from(k).ok().filter(|&k| k > 0);
        let max_distance = (max_distance > 0.0).then_some(max_distance);
        self.build(k, max_distance).map_err(js_err)
    }

    /// Louvain communities as `{assignment, n_communities, modularity, sizes}`.
    #[wasm_bindgen(js_name = cluster)]
    pub fn js_cluster(&self, seed: u32, weighted: bool) -> Result<String, JsError> {
        self.cluster(seed.into(), weighted).map_err(js_err)
    }

    #[wasm_bindgen(js_name = startLayout)]
    pub fn js_start_layout(&mut self, seed: u32, gravity: f64, scaling: f64, linlog: bool) -> Result<(), JsError> {
        self.start_layout(seed.into(), gravity, scaling, linlog).map_err(js_err)
    }

    #[wasm_bindgen(js_name = stepLayout)]
    pub fn js_advance(&mut self, iterations: usize) -> Result<Vec<f64>, JsError> {
        self.advance(iterations).map_err(js_err)
    }

    #[wasm_bindgen(getter, js_name = layoutIteration)]
    pub fn js_iteration(&self) -> usize {
        self.iteration()
    }
}
