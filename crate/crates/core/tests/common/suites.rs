//! Seeded property suites with fixed sample counts. Each returns a short
//! summary on success and the first counterexample on failure.

#![allow(dead_code)]

use passive_agreement::graph::{
    catalog, incidence_matrices, laplacians, undirected_eigen, undirected_spectrum, Digraph,
};
use passive_agreement::passivity::{rayleigh_bounds_check, ConstrainedStorage, Projector};
use passive_agreement::systems::OutputMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{out_laplacian, random_digraph, undirected_laplacian};

pub type SuiteResult = Result<String, String>;

pub fn projector_suite() -> SuiteResult {
    for n in 2..=200 {
        let p = Projector::new(n).matrix();
        let p2 = p.dot(&p);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if (p2[[i, j]] - p[[i, j]]).abs() > 1e-12 {
                    return Err(format!("n={n}: P² ≠ P at ({i},{j})"));
                }
                if (p[[i, j]] - p[[j, i]]).abs() > 1e-12 {
                    return Err(format!("n={n}: P not symmetric at ({i},{j})"));
                }
                row_sum += p[[i, j]];
            }
            if row_sum.abs() > 1e-12 {
                return Err(format!("n={n}: (P·1)_{i} = {row_sum:e}"));
            }
        }
    }
    Ok("n = 2..=200".into())
}

fn hetero_maps() -> Vec<OutputMap> {
    vec![
        OutputMap::identity(),
        OutputMap::identity(),
        OutputMap::tanh(),
        OutputMap::tanh(),
        OutputMap::saturation(),
    ]
}

fn inverse(map: &str, c: f64) -> f64 {
    match map {
        "identity" => c,
        "tanh" => c.atanh(),
        "saturation" => c / (1.0 - c.abs()),
        other => panic!("no inverse for {other}"),
    }
}

/// `Q ≥ 0` everywhere, and `Q ≈ 0` exactly on (near-)agreeing outputs.
/// Half of the states are drawn on the agreement set `h_i(x_i) = c`.
pub fn storage_definiteness_suite(samples: usize) -> SuiteResult {
    let maps = hetero_maps();
    let q = ConstrainedStorage::new(maps.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut on_set = 0;
    for k in 0..samples {
        let x: Vec<f64> = if k % 2 == 0 {
            (0..5).map(|_| rng.gen_range(-5.0..5.0)).collect()
        } else {
            let c = rng.gen_range(-0.9..0.9);
            maps.iter().map(|m| inverse(m.name(), c)).collect()
        };
        let value = q.value(&x).map_err(|e| e.to_string())?;
        if value < 0.0 {
            return Err(format!("Q({x:?}) = {value:e} < 0"));
        }
        let h = q.outputs(&x).map_err(|e| e.to_string())?;
        let hn = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ph = Projector::new(5).apply(&h).map_err(|e| e.to_string())?;
        let phn = ph.iter().map(|v| v * v).sum::<f64>().sqrt();
        let small_q = value <= 1e-12;
        let agreeing = phn <= 1e-6 * hn + 1e-12;
        if small_q != agreeing {
            return Err(format!("x = {x:?}: Q = {value:e}, ‖Ph‖ = {phn:e}, ‖h‖ = {hn:e}"));
        }
        on_set += agreeing as usize;
    }
    Ok(format!("{samples} states, {on_set} on the agreement set"))
}

pub fn rayleigh_suite(vectors_per_graph: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for (name, g) in [
        ("heterogeneous", catalog::heterogeneous_case()),
        ("negative", catalog::negative_case()),
    ] {
        let n = g.vertex_count();
        for _ in 0..vectors_per_graph {
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let c = rayleigh_bounds_check(&g, &y).map_err(|e| e.to_string())?;
            if !(c.lower_ok && c.upper_ok) {
                return Err(format!("{name}: bounds fail at y = {y:?}: {c:?}"));
            }
        }
        let eig = undirected_eigen(&g);
        for (col, which) in [(1, "lower"), (n - 1, "upper")] {
            let v = eig.vectors.column(col).to_vec();
            let c = rayleigh_bounds_check(&g, &v).map_err(|e| e.to_string())?;
            let bound = if col == 1 { c.lower_bound } else { c.upper_bound };
            if (c.quadratic_form - bound).abs() > 1e-8 * bound.abs().max(1e-300) {
                return Err(format!("{name}: {which} bound not attained: {c:?}"));
            }
        }
    }
    Ok(format!("{vectors_per_graph} vectors per graph, bounds attained"))
}

pub fn incidence_suite(graphs: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for k in 0..graphs {
        let n = rng.gen_range(2..=12);
        let m = rng.gen_range(0..=n * (n - 1) / 2);
        let edges = random_digraph(&mut rng, n, m);
        let g = Digraph::new(n, edges.iter().copied()).map_err(|e| e.to_string())?;
        let inc = incidence_matrices(&g);
        let lap = laplacians(&g);
        let sum = &inc.out_incidence + &inc.in_incidence;
        if sum != inc.incidence {
            return Err(format!("graph {k}: E ≠ B_o + B_i"));
        }
        let l_ref = undirected_laplacian(n, &edges);
        let lo_ref = out_laplacian(n, &edges);
        for i in 0..n {
            for j in 0..n {
                let l = lap.undirected[[i, j]];
                if (l - l_ref[i][j]).abs() > 1e-12 {
                    return Err(format!("graph {k}: EEᵀ ≠ L at ({i},{j})"));
                }
                if (lap.in_laplacian[[i, j]] + lap.out_laplacian[[i, j]] - l).abs() > 1e-12 {
                    return Err(format!("graph {k}: L_i + L_o ≠ L at ({i},{j})"));
                }
                if (lap.out_laplacian[[i, j]] - lo_ref[i][j]).abs() > 1e-12 {
                    return Err(format!("graph {k}: L_o mismatch at ({i},{j})"));
                }
            }
        }
    }
    Ok(format!("{graphs} random digraphs"))
}

/// The case-study spectra against hand-derived values.
pub fn case_spectra() -> SuiteResult {
    let hetero = undirected_spectrum(&catalog::heterogeneous_case());
    let negative = undirected_spectrum(&catalog::negative_case());
    let d_h = passive_agreement::graph::max_out_degree(&catalog::heterogeneous_case());
    let d_n = passive_agreement::graph::max_out_degree(&catalog::negative_case());
    // 5-vertex path: λ₂ = 2 − 2cos(π/5).
    let path_l2 = 2.0 - 2.0 * (std::f64::consts::PI / 5.0).cos();
    let ok = (hetero.lambda2 - 3.0).abs() < 1e-6
        && d_h == 2
        && (negative.lambda2 - 0.382).abs() < 1e-3
        && (negative.lambda2 - path_l2).abs() < 1e-12
        && d_n == 1;
    let summary = format!(
        "λ₂ = {:.9} / max D_o = {d_h}; λ₂ = {:.9} / max D_o = {d_n}",
        hetero.lambda2, negative.lambda2
    );
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}
