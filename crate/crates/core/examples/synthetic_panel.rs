//! Writes a synthetic 20-entity, 25-year demo panel in the long CSV layout
//! with the default WDI column names. The numbers are simulated; they are
//! only meant for exercising the pipeline.
//!
//! ```text
//! cargo run -p co2-analysis --example synthetic_panel -- data/demo_panel.csv
//! ```

use std::error::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const ENTITIES: usize = 20;
const FIRST_YEAR: i32 = 1990;
const YEARS: usize = 25;

fn main() -> Result<(), Box<dyn Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data/demo_panel.csv".into());
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_101);
    let noise = Normal::new(0.0, 1.0)?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "country",
        "year",
        "EN.ATM.CO2E.KT",
        "EG.FEC.RNEW.ZS",
        "AG.LND.FRST.ZS",
        "EG.ELC.FOSL.ZS",
        "EG.GDP.PUSE.KO.PP.KD",
        "EN.ATM.GHGT.KT.CE",
        "AG.LND.FRST.K2",
        "EG.USE.PCAP.KG.OE",
        "EG.USE.ELEC.KH.PC",
    ])?;
    for i in 0..ENTITIES {
        // Entity-level traits; `size` drives both the effect and the
        // regressor levels, so effects correlate with the regressors.
        let size: f64 = rng.random_range(0.5..3.0);
        let land = 1.0e5 * rng.random_range(1.0..20.0);
        let forest_share = rng.random_range(10.0..60.0);
        let renew0 = rng.random_range(5.0..50.0);
        let renew_trend = rng.random_range(-0.2..0.8);
        let fossil0 = rng.random_range(20.0..90.0);
        let gdp0 = rng.random_range(5.0..12.0);
        let use0 = 2000.0 + 3000.0 * size + rng.random_range(0.0..1500.0);
        let shape = i % 3;
        let (mut renew_shock, mut gdp_shock) = (0.0, 0.0);
        for t in 0..YEARS {
            let tf = t as f64;
            renew_shock = 0.6 * renew_shock + 0.8 * noise.sample(&mut rng);
            gdp_shock = 0.5 * gdp_shock + 0.2 * noise.sample(&mut rng);
            let renew = (renew0 + renew_trend * tf + renew_shock).max(0.5);
            let forest_pct = forest_share + 0.05 * tf + 0.1 * noise.sample(&mut rng);
            let forest_km2 = forest_pct / 100.0 * land;
            let fossil = (fossil0 - 0.3 * tf + noise.sample(&mut rng)).clamp(1.0, 99.0);
            let gdp = gdp0 + 0.12 * tf + gdp_shock;
            let energy_use = use0 * (1.0 + 0.005 * tf) + 40.0 * noise.sample(&mut rng);
            let elec = 2.5 * energy_use + 300.0 * noise.sample(&mut rng);
            let path = match shape {
                0 => 1.0 + 0.015 * tf,
                1 => 1.0 + 0.03 * tf - 0.0015 * tf * tf,
                _ => 1.0 - 0.01 * tf,
            };
            let co2 = 1.0e5 * size * path + 2.0e3 * (60.0 - renew) - 8.0e3 * gdp + 0.2 * forest_km2 / 10.0
                + 1.5e3 * noise.sample(&mut rng);
            let ghg = 1.3e5 * size * (1.0 + 0.01 * tf) + 0.3 * co2 + 2.0e3 * noise.sample(&mut rng);
            w.write_record([
                format!("Country{:02}", i + 1),
                (FIRST_YEAR + t as i32).to_string(),
                format!("{co2:.3}"),
                format!("{renew:.4}"),
                format!("{forest_pct:.4}"),
                format!("{fossil:.4}"),
                format!("{gdp:.4}"),
                format!("{ghg:.3}"),
                format!("{forest_km2:.2}"),
                format!("{energy_use:.3}"),
                format!("{elec:.3}"),
            ])?;
        }
    }
    w.flush()?;
    eprintln!("wrote {path}");
    Ok(())
}
