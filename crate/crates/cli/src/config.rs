//! TOML configuration schema, validation, and model construction.
//!
//! Validation errors always name the offending field. Weight and input data
//! come either from `.ct16` tensor files (paths resolved relative to the
//! config file) or from the seeded generator; generation order is fixed
//! (input first, then each layer in document order) so a seed pins every
//! random value in the run.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use convsim_core::dataflow::NetworkLayer;
use convsim_core::reference::{ActivationKind, FullyConnected, PoolKind};
use convsim_core::tensor::output_dims;
use convsim_core::{FeatureMap, Fixed16, KernelSet};

use crate::CliError;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub clock_mhz: Option<f64>,
    pub power_watts: Option<f64>,
    pub input: Option<InputSpec>,
    /// Single-layer section used by the `layer` subcommand.
    pub layer: Option<LayerSpec>,
    /// Layer list used by the `network` subcommand.
    pub layers: Option<Vec<LayerSpec>>,
    pub tree: Option<TreeSpec>,
    pub trace: Option<TraceSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    #[serde(default)]
    pub source: SourceSpec,
}

/// Where tensor data comes from: `random`, `zeros`, or `file` (+ `path`).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    #[serde(default = "default_source_kind")]
    pub kind: String,
    pub path: Option<PathBuf>,
}

fn default_source_kind() -> String {
    "random".into()
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec {
            kind: default_source_kind(),
            path: None,
        }
    }
}

/// One network stage. `kind` selects which of the optional fields apply.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    #[serde(default = "default_layer_kind")]
    pub kind: String,
    // conv
    pub kernels: Option<usize>,
    pub kernel_size: Option<usize>,
    pub stride: Option<usize>,
    pub stride_h: Option<usize>,
    pub stride_w: Option<usize>,
    pub weights: Option<SourceSpec>,
    // activation
    pub function: Option<String>,
    // pool
    pub reduce: Option<String>,
    pub size: Option<usize>,
    // fully_connected
    pub outputs: Option<usize>,
}

fn default_layer_kind() -> String {
    "conv".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub eta_min: Option<usize>,
    pub eta_max: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSpec {
    pub height: Option<usize>,
    pub width: Option<usize>,
    pub kernel: Option<usize>,
}

impl ConfigFile {
    /// Parses a config file; parse failures keep toml's line/column message.
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            context: format!("reading config {}", path.display()),
            source: e,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

fn validation(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn require<T: Copy>(value: Option<T>, field: &str) -> Result<T, CliError> {
    value.ok_or_else(|| validation(field, "missing required field"))
}

fn require_at_least_one(value: usize, field: &str) -> Result<usize, CliError> {
    if value == 0 {
        return Err(validation(field, "must be at least 1"));
    }
    Ok(value)
}

/// Seeded data generator plus path resolution for `.ct16` references.
pub struct Builder {
    rng: ChaCha8Rng,
    base_dir: PathBuf,
}

impl Builder {
    pub fn new(seed: u64, config_path: &Path) -> Builder {
        Builder {
            rng: ChaCha8Rng::seed_from_u64(seed),
            base_dir: config_path
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default(),
        }
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    /// Input samples draw from [0, 1); weights and biases from [-1, 1).
    fn random_sample(&mut self) -> Fixed16 {
        Fixed16::quantize(self.rng.gen::<f64>())
    }

    fn random_weight(&mut self) -> Fixed16 {
        Fixed16::quantize(self.rng.gen_range(-1.0..1.0))
    }

    pub fn build_input(&mut self, spec: &InputSpec) -> Result<FeatureMap, CliError> {
        let channels = require_at_least_one(spec.channels, "input.channels")?;
        let height = require_at_least_one(spec.height, "input.height")?;
        let width = require_at_least_one(spec.width, "input.width")?;
        match spec.source.kind.as_str() {
            "random" => {
                let data = (0..channels * height * width)
                    .map(|_| self.random_sample())
                    .collect();
                FeatureMap::new(channels, height, width, data)
                    .map_err(|e| validation("input", e.to_string()))
            }
            "zeros" => FeatureMap::zeros(channels, height, width)
                .map_err(|e| validation("input", e.to_string())),
            "file" => {
                let path = spec
                    .source
                    .path
                    .as_ref()
                    .ok_or_else(|| validation("input.source.path", "missing required field"))?;
                let fm = FeatureMap::load(self.resolve(path)).map_err(CliError::Core)?;
                if (fm.channels(), fm.height(), fm.width()) != (channels, height, width) {
                    return Err(validation(
                        "input.source.path",
                        format!(
                            "tensor is {}x{}x{} but input declares {}x{}x{}",
                            fm.channels(),
                            fm.height(),
                            fm.width(),
                            channels,
                            height,
                            width
                        ),
                    ));
                }
                Ok(fm)
            }
            other => Err(validation(
                "input.source.kind",
                format!("unknown source kind {other:?} (expected random, zeros, or file)"),
            )),
        }
    }

    fn build_kernels(
        &mut self,
        spec: &LayerSpec,
        field: &str,
        in_channels: usize,
    ) -> Result<(KernelSet, usize, usize), CliError> {
        let kernels = require_at_least_one(
            require(spec.kernels, &format!("{field}.kernels"))?,
            &format!("{field}.kernels"),
        )?;
        let kernel_size = require_at_least_one(
            require(spec.kernel_size, &format!("{field}.kernel_size"))?,
            &format!("{field}.kernel_size"),
        )?;
        let stride_h = spec.stride_h.or(spec.stride).unwrap_or(1);
        let stride_w = spec.stride_w.or(spec.stride).unwrap_or(1);
        require_at_least_one(stride_h, &format!("{field}.stride"))?;
        require_at_least_one(stride_w, &format!("{field}.stride"))?;
        let source = spec.weights.clone_or_default();
        let ks = match source.kind.as_str() {
            "random" => {
                let weights = (0..kernels * in_channels * kernel_size * kernel_size)
                    .map(|_| self.random_weight())
                    .collect();
                let bias = (0..kernels).map(|_| self.random_weight()).collect();
                KernelSet::new(
                    kernels,
                    in_channels,
                    kernel_size,
                    kernel_size,
                    weights,
                    bias,
                )
                .map_err(|e| validation(field, e.to_string()))?
            }
            "zeros" => {
                let weights =
                    vec![Fixed16::ZERO; kernels * in_channels * kernel_size * kernel_size];
                let bias = vec![Fixed16::ZERO; kernels];
                KernelSet::new(
                    kernels,
                    in_channels,
                    kernel_size,
                    kernel_size,
                    weights,
                    bias,
                )
                .map_err(|e| validation(field, e.to_string()))?
            }
            "file" => {
                let path_field = format!("{field}.weights.path");
                let path = source
                    .path
                    .as_ref()
                    .ok_or_else(|| validation(&path_field, "missing required field"))?;
                let ks = KernelSet::load(self.resolve(path)).map_err(CliError::Core)?;
                if ks.kernels() != kernels
                    || ks.channels() != in_channels
                    || ks.kernel_h() != kernel_size
                    || ks.kernel_w() != kernel_size
                {
                    return Err(validation(
                        &path_field,
                        format!(
                            "tensor is {}x{}x{}x{} but the layer declares {}x{}x{}x{}",
                            ks.kernels(),
                            ks.channels(),
                            ks.kernel_h(),
                            ks.kernel_w(),
                            kernels,
                            in_channels,
                            kernel_size,
                            kernel_size
                        ),
                    ));
                }
                ks
            }
            other => {
                return Err(validation(
                    &format!("{field}.weights.kind"),
                    format!("unknown source kind {other:?} (expected random, zeros, or file)"),
                ))
            }
        };
        Ok((ks, stride_h, stride_w))
    }

    fn build_fully_connected(
        &mut self,
        spec: &LayerSpec,
        field: &str,
        inputs: usize,
    ) -> Result<FullyConnected, CliError> {
        let outputs = require_at_least_one(
            require(spec.outputs, &format!("{field}.outputs"))?,
            &format!("{field}.outputs"),
        )?;
        let source = spec.weights.clone_or_default();
        match source.kind.as_str() {
            "random" => {
                let weights = (0..outputs * inputs)
                    .map(|_| self.random_weight())
                    .collect();
                let bias = (0..outputs).map(|_| self.random_weight()).collect();
                FullyConnected::new(outputs, inputs, weights, bias)
                    .map_err(|e| validation(field, e.to_string()))
            }
            "zeros" => FullyConnected::new(
                outputs,
                inputs,
                vec![Fixed16::ZERO; outputs * inputs],
                vec![Fixed16::ZERO; outputs],
            )
            .map_err(|e| validation(field, e.to_string())),
            "file" => {
                // Dense weights are stored as a rank-4 kernel set of shape
                // (outputs, inputs, 1, 1).
                let path_field = format!("{field}.weights.path");
                let path = source
                    .path
                    .as_ref()
                    .ok_or_else(|| validation(&path_field, "missing required field"))?;
                let ks = KernelSet::load(self.resolve(path)).map_err(CliError::Core)?;
                if ks.kernels() != outputs
                    || ks.channels() != inputs
                    || ks.kernel_h() != 1
                    || ks.kernel_w() != 1
                {
                    return Err(validation(
                        &path_field,
                        format!(
                            "tensor is {}x{}x{}x{} but the layer needs {}x{}x1x1",
                            ks.kernels(),
                            ks.channels(),
                            ks.kernel_h(),
                            ks.kernel_w(),
                            outputs,
                            inputs
                        ),
                    ));
                }
                let weights = (0..outputs * inputs)
                    .map(|i| ks.weight(i / inputs, i % inputs, 0, 0))
                    .collect();
                FullyConnected::new(outputs, inputs, weights, ks.biases().to_vec())
                    .map_err(|e| validation(&path_field, e.to_string()))
            }
            other => Err(validation(
                &format!("{field}.weights.kind"),
                format!("unknown source kind {other:?} (expected random, zeros, or file)"),
            )),
        }
    }

    /// Builds one layer and advances the shape chain `(channels, h, w)`.
    fn build_layer(
        &mut self,
        spec: &LayerSpec,
        field: &str,
        shape: &mut (usize, usize, usize),
    ) -> Result<NetworkLayer, CliError> {
        let kind_field = format!("{field}.kind");
        match spec.kind.as_str() {
            "conv" => {
                let (kernels, stride_h, stride_w) = self.build_kernels(spec, field, shape.0)?;
                let (oh, ow) = output_dims(
                    shape.1,
                    shape.2,
                    kernels.kernel_h(),
                    kernels.kernel_w(),
                    stride_h,
                    stride_w,
                )
                .map_err(|e| validation(field, e.to_string()))?;
                *shape = (kernels.kernels(), oh, ow);
                Ok(NetworkLayer::Conv {
                    kernels,
                    stride_h,
                    stride_w,
                })
            }
            "activation" => {
                let kind = match spec.function.as_deref().unwrap_or("relu") {
                    "relu" => ActivationKind::Relu,
                    "identity" => ActivationKind::Identity,
                    other => {
                        return Err(validation(
                            &format!("{field}.function"),
                            format!("unknown activation {other:?} (expected relu or identity)"),
                        ))
                    }
                };
                Ok(NetworkLayer::Activation { kind })
            }
            "pool" => {
                let size = require_at_least_one(
                    require(spec.size, &format!("{field}.size"))?,
                    &format!("{field}.size"),
                )?;
                let stride = require_at_least_one(
                    spec.stride.unwrap_or(size),
                    &format!("{field}.stride"),
                )?;
                let kind = match spec.reduce.as_deref().unwrap_or("max") {
                    "max" => PoolKind::Max,
                    "average" => PoolKind::Average,
                    other => {
                        return Err(validation(
                            &format!("{field}.reduce"),
                            format!("unknown pool reduce {other:?} (expected max or average)"),
                        ))
                    }
                };
                let (oh, ow) = output_dims(shape.1, shape.2, size, size, stride, stride)
                    .map_err(|e| validation(field, e.to_string()))?;
                *shape = (shape.0, oh, ow);
                Ok(NetworkLayer::Pool { kind, size, stride })
            }
            "fully_connected" => {
                let inputs = shape.0 * shape.1 * shape.2;
                let fc = self.build_fully_connected(spec, field, inputs)?;
                *shape = (fc.outputs(), 1, 1);
                Ok(NetworkLayer::FullyConnected { layer: fc })
            }
            other => Err(validation(
                &kind_field,
                format!(
                    "unknown layer kind {other:?} (expected conv, activation, pool, or fully_connected)"
                ),
            )),
        }
    }

    /// Builds the whole layer list, tracking the shape chain.
    pub fn build_network(
        &mut self,
        specs: &[LayerSpec],
        input_shape: (usize, usize, usize),
    ) -> Result<Vec<NetworkLayer>, CliError> {
        let mut shape = input_shape;
        let mut layers = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            let field = format!("layers[{i}]");
            layers.push(self.build_layer(spec, &field, &mut shape)?);
        }
        Ok(layers)
    }

    /// Builds the single conv layer of a `layer` run.
    pub fn build_single_conv(
        &mut self,
        spec: &LayerSpec,
        in_channels: usize,
    ) -> Result<(KernelSet, usize, usize), CliError> {
        if spec.kind != "conv" {
            return Err(validation(
                "layer.kind",
                format!(
                    "the layer subcommand simulates conv layers, got {:?}",
                    spec.kind
                ),
            ));
        }
        self.build_kernels(spec, "layer", in_channels)
    }
}

trait CloneOrDefault {
    fn clone_or_default(&self) -> SourceSpec;
}

impl CloneOrDefault for Option<SourceSpec> {
    fn clone_or_default(&self) -> SourceSpec {
        match self {
            Some(s) => SourceSpec {
                kind: s.kind.clone(),
                path: s.path.clone(),
            },
            None => SourceSpec::default(),
        }
    }
}
