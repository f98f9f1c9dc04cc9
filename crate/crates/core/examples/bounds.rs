//! Mixing coefficient, concentration widths, a Monte-Carlo diameter and the
//! regret bound for the committed synthetic model.

use spectral_pomdp::diagnostics::{
    azuma_width, deterministic_policy_set, dobrushin_theta, estimate_diameter, moment_concentration_width,
    regret_bound, triple_concentration_width, BoundInputs,
};
use spectral_pomdp::pomdp::{induced_transition, MemorylessPolicy, PomdpModel};
use spectral_pomdp::spectral::view_dims;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/synthetic_x2y4a2r4.json");
    let model = PomdpModel::read_json(path)?;
    let (x, a, y, r) = (model.num_states(), model.num_actions(), model.num_observations(), model.num_rewards());

    let uniform = MemorylessPolicy::uniform(a, y);
    let theta = dobrushin_theta(&induced_transition(&model, &uniform)?);
    println!("Dobrushin θ of the uniform-policy chain: {theta:.4}");

    let [d1, d2, d3] = view_dims(a, y, r);
    println!("view dimensions: {d1}, {d2}, {d3}");
    println!("\n{:>8}  {:>9}  {:>9}  {:>9}  {:>9}", "N_l", "K12", "K13", "K23", "triple");
    for n in [1_000, 10_000, 100_000] {
        println!(
            "{n:>8}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9.4}",
            moment_concentration_width(1.0, theta, n, d1, d2, 0.05)?,
            moment_concentration_width(1.0, theta, n, d1, d3, 0.05)?,
            moment_concentration_width(1.0, theta, n, d2, d3, 0.05)?,
            triple_concentration_width(1.0, theta, n, [d1, d2, d3], 0.05)?,
        );
    }
    println!(
        "\nmatrix Azuma width (c = 1, n = 10^4, 8×8): {:.2}, symmetric form {:.2}",
        azuma_width(1.0, 1e4, 8, 8, theta, 0.05, false)?,
        azuma_width(1.0, 1e4, 8, 8, theta, 0.05, true)?
    );

    let policies = deterministic_policy_set(a, y, 0.02)?;
    let diameter = estimate_diameter(&model, &policies, 200, 10_000, 1)?;
    println!(
        "\ndiameter over {} deterministic floored maps: D̂ = {:.2} ({} capped cells)",
        policies.len(),
        diameter.diameter,
        diameter.capped_cells
    );
    for (from, row) in diameter.times.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|t| format!("{t:6.2}")).collect();
        println!("  from (x={}, a={}): {}", from / a, from % a, cells.join(" "));
    }

    for n in [1e4, 1e5, 1e6] {
        let inputs = BoundInputs {
            d: diameter.diameter,
            c1: 1.0,
            n,
            x,
            a,
            y,
            r,
            r_max: model.r_max(),
            delta_prime: 0.05,
        };
        let bound = regret_bound(&inputs)?;
        println!("regret bound at N = {n:.0e}: {bound:.3e} (per step {:.2})", bound / n);
    }
    Ok(())
}
