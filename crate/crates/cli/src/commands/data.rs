use std::path::PathBuf;

use clap::Args;
use fdm_core::evalbench::{gen_colored_rooms, gen_town_drive, RoomsConfig, TownConfig};

use super::settings;
use crate::config::{flag, Default};
use crate::error::CliError;
use crate::Common;

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// `town-drive` or `colored-rooms`.
    generator: Option<String>,
    #[arg(long)]
    count: Option<usize>,
    /// Frames per video.
    #[arg(long)]
    n: Option<usize>,
    /// Output video file; metadata goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    v_max: Option<f64>,
    #[arg(long)]
    light_density: Option<f64>,
    #[arg(long)]
    rooms: Option<usize>,
    #[arg(long)]
    palette: Option<usize>,
    #[command(flatten)]
    common: Common,
}

const DEFAULTS: &[Default] = &[
    ("generator", None),
    ("count", Some("100")),
    ("n", Some("100")),
    ("out", None),
    ("town.grid_size", Some("4")),
    ("town.block", Some("10")),
    ("town.v_max", Some("3")),
    ("town.light_density", Some("0.3")),
    ("rooms.count", Some("6")),
    ("rooms.palette_size", Some("8")),
    ("rooms.dwell_min", Some("6")),
    ("rooms.dwell_max", Some("15")),
];

pub fn run(a: GenDataArgs) -> Result<(), CliError> {
    let s = settings(
        &a.common,
        DEFAULTS,
        None,
        vec![
            flag("generator", &a.generator),
            flag("count", &a.count),
            flag("n", &a.n),
            flag("out", &a.out.as_ref().map(|p| p.display())),
            flag("town.grid_size", &a.grid_size),
            flag("town.v_max", &a.v_max),
            flag("town.light_density", &a.light_density),
            flag("rooms.count", &a.rooms),
            flag("rooms.palette_size", &a.palette),
        ],
    )?;
    let count: usize = s.get("count")?;
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let (n, seed) = (s.get("n")?, s.get("seed")?);
    let data = match s.str("generator")? {
        "town-drive" => gen_town_drive(&TownConfig {
            grid_size: s.get("town.grid_size")?,
            block: s.get("town.block")?,
            v_max: s.get("town.v_max")?,
            light_density: s.get("town.light_density")?,
            ..TownConfig::new(count, n, seed)
        })?,
        "colored-rooms" => gen_colored_rooms(&RoomsConfig {
            n_rooms: s.get("rooms.count")?,
            palette_size: s.get("rooms.palette_size")?,
            dwell: (s.get("rooms.dwell_min")?, s.get("rooms.dwell_max")?),
            ..RoomsConfig::new(count, n, seed)
        })?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown generator {other:?} (expected town-drive or colored-rooms)"
            )))
        }
    };
    let out = s.path("out")?;
    data.save(&out)?;
    let mut snap = out.as_os_str().to_owned();
    snap.push(".config.kv");
    s.write_snapshot(&PathBuf::from(snap))?;
    eprintln!("wrote {} videos of {} frames to {}", count, n, out.display());
    Ok(())
}
