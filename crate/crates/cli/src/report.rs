//! CSV and summary emission. Every value written here is a deterministic
//! function of the config and seed, so identical runs produce byte-identical
//! files.

use std::fmt::Write as _;
use std::path::Path;

use convsim_core::dataflow::NetworkStats;
use convsim_core::perf::{self, LayerStats};
use convsim_core::tree::TreeVariant;
use convsim_core::Fixed16;

use crate::CliError;

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        context: format!("writing {}", path.display()),
        source: e,
    })
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Io {
        context: format!("creating output directory {}", path.display()),
        source: e,
    })
}

fn parallelism_label(p: Option<usize>) -> String {
    match p {
        Some(v) => v.to_string(),
        None => "full".into(),
    }
}

pub struct LayerRunReport<'a> {
    pub out_shape: (usize, usize, usize),
    pub variant: TreeVariant,
    pub pn: Option<usize>,
    pub pm: Option<usize>,
    pub stats: &'a LayerStats,
    pub clock_hz: f64,
    pub power_watts: Option<f64>,
    pub seed: u64,
}

impl LayerRunReport<'_> {
    pub fn csv(&self) -> Result<String, CliError> {
        let s = self.stats;
        let gops = s.gops(self.clock_hz).map_err(CliError::Core)?;
        let mut out = String::new();
        writeln!(
            out,
            "out_channels,out_height,out_width,variant,pn,pm,macs,ops,\
             stream_cycles,drain_cycles,total_cycles,tree_depth,passes,\
             multipliers,adders,registers,gops"
        )
        .unwrap();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6}",
            self.out_shape.0,
            self.out_shape.1,
            self.out_shape.2,
            self.variant.name(),
            parallelism_label(self.pn),
            parallelism_label(self.pm),
            s.macs,
            s.ops,
            s.stream_cycles,
            s.drain_cycles,
            s.cycles,
            s.tree_depth,
            s.passes,
            s.multipliers,
            s.adders,
            s.registers,
            gops
        )
        .unwrap();
        Ok(out)
    }

    pub fn summary(&self) -> Result<String, CliError> {
        let s = self.stats;
        let gops = s.gops(self.clock_hz).map_err(CliError::Core)?;
        let mut out = String::new();
        writeln!(out, "layer simulation").unwrap();
        writeln!(out, "  seed: {}", self.seed).unwrap();
        writeln!(out, "  clock: {} MHz", self.clock_hz / 1e6).unwrap();
        writeln!(
            out,
            "  engine: {} tree, pn {}, pm {}",
            self.variant.name(),
            parallelism_label(self.pn),
            parallelism_label(self.pm)
        )
        .unwrap();
        writeln!(
            out,
            "  output: {}x{}x{}",
            self.out_shape.0, self.out_shape.1, self.out_shape.2
        )
        .unwrap();
        writeln!(out, "  macs: {}  ops: {}", s.macs, s.ops).unwrap();
        writeln!(
            out,
            "  cycles: {} (stream {} + drain {}), {} multiplexing pass(es)",
            s.cycles, s.stream_cycles, s.drain_cycles, s.passes
        )
        .unwrap();
        writeln!(
            out,
            "  resources: {} multipliers, {} adders, {} registers (tree depth {})",
            s.multipliers, s.adders, s.registers, s.tree_depth
        )
        .unwrap();
        writeln!(
            out,
            "  latency: {:.6} ms  throughput: {:.6} GOPS",
            perf::latency_seconds(s.cycles, self.clock_hz) * 1e3,
            gops
        )
        .unwrap();
        if let Some(power) = self.power_watts {
            let eff = perf::EfficiencyReport::new(gops, power).map_err(CliError::Core)?;
            writeln!(
                out,
                "  efficiency: {:.6} GOPS/W at {} W",
                eff.gops_per_watt, power
            )
            .unwrap();
        }
        Ok(out)
    }
}

pub struct NetworkRunReport<'a> {
    pub stats: &'a NetworkStats,
    pub scores: &'a [Fixed16],
    pub variant: TreeVariant,
    pub pn: Option<usize>,
    pub pm: Option<usize>,
    pub clock_hz: f64,
    pub power_watts: Option<f64>,
    pub seed: u64,
}

impl NetworkRunReport<'_> {
    pub fn csv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "layer,kind,out_channels,out_height,out_width,params,macs,ops,\
             cycles,multipliers,adders,registers"
        )
        .unwrap();
        for l in &self.stats.layers {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                l.index,
                l.kind,
                l.out_channels,
                l.out_height,
                l.out_width,
                l.params,
                l.macs,
                l.ops,
                l.cycles,
                l.multipliers,
                l.adders,
                l.registers
            )
            .unwrap();
        }
        out
    }

    pub fn scores_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "class,raw,value").unwrap();
        for (i, s) in self.scores.iter().enumerate() {
            writeln!(out, "{},{},{:.8}", i, s.raw(), s.to_real()).unwrap();
        }
        out
    }

    pub fn summary(&self) -> Result<String, CliError> {
        let st = self.stats;
        let mut out = String::new();
        writeln!(out, "network simulation").unwrap();
        writeln!(out, "  seed: {}", self.seed).unwrap();
        writeln!(out, "  clock: {} MHz", self.clock_hz / 1e6).unwrap();
        writeln!(
            out,
            "  engine: {} tree, pn {}, pm {}",
            self.variant.name(),
            parallelism_label(self.pn),
            parallelism_label(self.pm)
        )
        .unwrap();
        writeln!(out).unwrap();
        writeln!(
            out,
            "  {:<5} {:<16} {:<12} {:>8} {:>10} {:>10} {:>10}",
            "layer", "kind", "output", "params", "macs", "ops", "cycles"
        )
        .unwrap();
        for l in &st.layers {
            writeln!(
                out,
                "  {:<5} {:<16} {:<12} {:>8} {:>10} {:>10} {:>10}",
                l.index,
                l.kind,
                format!("{}x{}x{}", l.out_channels, l.out_height, l.out_width),
                l.params,
                l.macs,
                l.ops,
                l.cycles
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(
            out,
            "  totals: params {}, macs {}, ops {}",
            st.total_params, st.total_macs, st.total_ops
        )
        .unwrap();
        if st.engine_cycles > 0 {
            let gops = perf::gops(st.engine_ops, st.engine_cycles, self.clock_hz)
                .map_err(CliError::Core)?;
            writeln!(
                out,
                "  engine (conv stages): {} cycles, latency {:.6} ms, {:.6} GOPS",
                st.engine_cycles,
                perf::latency_seconds(st.engine_cycles, self.clock_hz) * 1e3,
                gops
            )
            .unwrap();
            if let Some(power) = self.power_watts {
                let eff = perf::EfficiencyReport::new(gops, power).map_err(CliError::Core)?;
                writeln!(
                    out,
                    "  efficiency: {:.6} GOPS/W at {} W",
                    eff.gops_per_watt, power
                )
                .unwrap();
            }
        }
        writeln!(out).unwrap();
        writeln!(out, "  scores:").unwrap();
        for (i, s) in self.scores.iter().enumerate() {
            writeln!(out, "    class {}: {:.8}", i, s.to_real()).unwrap();
        }
        Ok(out)
    }
}
