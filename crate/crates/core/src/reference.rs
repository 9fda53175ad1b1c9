//! Golden direct-evaluation layer operators.
//!
//! Everything here evaluates the convolution sum the obvious way: gather,
//! multiply, accumulate wide, round once. This is the oracle the streaming
//! simulator is compared against bit for bit, and it also provides the
//! pooling / activation / fully-connected operators used around the
//! convolution layers.

use crate::error::{Error, Result};
use crate::fixedpoint::{Acc40, Fixed16};
use crate::parallel;
use crate::tensor::{ConvGeometry, FeatureMap, KernelSet};

/// Direct evaluation of the convolution sum over every output element.
///
/// Each output element accumulates `channels * kernel_h * kernel_w` products
/// plus the bias in the wide accumulator and is narrowed exactly once.
pub fn conv_reference(
    x: &FeatureMap,
    k: &KernelSet,
    stride_h: usize,
    stride_w: usize,
) -> Result<FeatureMap> {
    check_channels(x, k)?;
    let geo = ConvGeometry::new(
        x.height(),
        x.width(),
        k.kernel_h(),
        k.kernel_w(),
        stride_h,
        stride_w,
    )?;
    let (out_h, out_w) = (geo.out_h, geo.out_w);
    let plane = out_h * out_w;
    let mut out = vec![Fixed16::ZERO; k.kernels() * plane];
    parallel::for_each_chunk_mut(&mut out, plane, |m, slot| {
        for oi in 0..out_h {
            for oj in 0..out_w {
                let mut acc = k.bias(m).widen();
                for n in 0..x.channels() {
                    for i in 0..k.kernel_h() {
                        for j in 0..k.kernel_w() {
                            acc += x.get(n, oi * stride_h + i, oj * stride_w + j)
                                * k.weight(m, n, i, j);
                        }
                    }
                }
                slot[oi * out_w + oj] = acc.narrow();
            }
        }
    });
    FeatureMap::new(k.kernels(), out_h, out_w, out)
}

/// Wide outputs of all kernels for the window anchored at the top-left
/// corner of the input, bias included.
pub fn conv_window_topleft(x: &FeatureMap, k: &KernelSet) -> Result<Vec<Acc40>> {
    check_channels(x, k)?;
    check_window_fits(x, k)?;
    Ok((0..k.kernels())
        .map(|m| {
            let mut acc = k.bias(m).widen();
            for n in 0..x.channels() {
                for i in 0..k.kernel_h() {
                    for j in 0..k.kernel_w() {
                        acc += x.get(n, i, j) * k.weight(m, n, i, j);
                    }
                }
            }
            acc
        })
        .collect())
}

/// Exact inner product of one window channel with one kernel channel.
pub fn partial_sum(window: &[Fixed16], kernel: &[Fixed16]) -> Result<Acc40> {
    if window.len() != kernel.len() {
        return Err(Error::LengthMismatch {
            expected: kernel.len(),
            actual: window.len(),
        });
    }
    Ok(window.iter().zip(kernel).map(|(&x, &w)| x * w).sum())
}

/// Sums the per-channel partial results and adds the bias word.
pub fn sum_over_input_channels(partials: &[Acc40], bias: Fixed16) -> Acc40 {
    partials.iter().copied().sum::<Acc40>() + bias.widen()
}

/// Top-left window outputs computed the accumulator way: walk the input
/// channels one at a time, adding each channel's kernel responses into all
/// output registers, then add the bias vector last.
///
/// Always agrees bit-exactly with [`conv_window_topleft`]; the two exist as
/// independent routes to the same values.
pub fn accumulate_output_components(x: &FeatureMap, k: &KernelSet) -> Result<Vec<Acc40>> {
    check_channels(x, k)?;
    check_window_fits(x, k)?;
    let mut regs = vec![Acc40::ZERO; k.kernels()];
    for n in 0..x.channels() {
        for (m, reg) in regs.iter_mut().enumerate() {
            let mut a = Acc40::ZERO;
            for i in 0..k.kernel_h() {
                for j in 0..k.kernel_w() {
                    a += x.get(n, i, j) * k.weight(m, n, i, j);
                }
            }
            *reg += a;
        }
    }
    for (m, reg) in regs.iter_mut().enumerate() {
        *reg += k.bias(m).widen();
    }
    Ok(regs)
}

/// Pooling reduction applied per window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolKind {
    #[default]
    Max,
    Average,
}

/// Per-channel pooling with valid-convolution window geometry.
pub fn pool(x: &FeatureMap, kind: PoolKind, size: usize, stride: usize) -> Result<FeatureMap> {
    let geo = ConvGeometry::new(x.height(), x.width(), size, size, stride, stride)?;
    let (out_h, out_w) = (geo.out_h, geo.out_w);
    let plane = out_h * out_w;
    let mut out = vec![Fixed16::ZERO; x.channels() * plane];
    parallel::for_each_chunk_mut(&mut out, plane, |n, slot| {
        for oi in 0..out_h {
            for oj in 0..out_w {
                slot[oi * out_w + oj] = match kind {
                    PoolKind::Max => {
                        let mut best = i16::MIN;
                        for i in 0..size {
                            for j in 0..size {
                                best = best.max(x.get(n, oi * stride + i, oj * stride + j).raw());
                            }
                        }
                        Fixed16::from_raw(best)
                    }
                    PoolKind::Average => {
                        let mut sum = 0i64;
                        for i in 0..size {
                            for j in 0..size {
                                sum += x.get(n, oi * stride + i, oj * stride + j).raw() as i64;
                            }
                        }
                        let avg = div_round_half_even(sum, (size * size) as i64);
                        Fixed16::from_raw(avg.clamp(i16::MIN as i64, i16::MAX as i64) as i16)
                    }
                };
            }
        }
    });
    FeatureMap::new(x.channels(), out_h, out_w, out)
}

/// Max pooling, the default reduction.
pub fn pool_max(x: &FeatureMap, size: usize, stride: usize) -> Result<FeatureMap> {
    pool(x, PoolKind::Max, size, stride)
}

/// Elementwise activation function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivationKind {
    #[default]
    Relu,
    Identity,
}

/// Applies the activation elementwise.
pub fn activation(x: &FeatureMap, kind: ActivationKind) -> FeatureMap {
    let data = x
        .data()
        .iter()
        .map(|v| match kind {
            ActivationKind::Relu => Fixed16::from_raw(v.raw().max(0)),
            ActivationKind::Identity => *v,
        })
        .collect();
    FeatureMap::new(x.channels(), x.height(), x.width(), data)
        .expect("shape unchanged by activation")
}

/// Dense layer weights: `outputs` rows of `inputs` words plus one bias word
/// per output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FullyConnected {
    outputs: usize,
    inputs: usize,
    weights: Vec<Fixed16>,
    bias: Vec<Fixed16>,
}

impl FullyConnected {
    pub fn new(
        outputs: usize,
        inputs: usize,
        weights: Vec<Fixed16>,
        bias: Vec<Fixed16>,
    ) -> Result<Self> {
        if outputs == 0 || inputs == 0 {
            return Err(Error::Dimension {
                what: "fully connected dimensions must be at least 1".into(),
            });
        }
        let len = outputs
            .checked_mul(inputs)
            .ok_or_else(|| Error::Dimension {
                what: "fully connected weight volume overflows".into(),
            })?;
        if weights.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: weights.len(),
            });
        }
        if bias.len() != outputs {
            return Err(Error::LengthMismatch {
                expected: outputs,
                actual: bias.len(),
            });
        }
        Ok(FullyConnected {
            outputs,
            inputs,
            weights,
            bias,
        })
    }

    pub fn from_fn(
        outputs: usize,
        inputs: usize,
        mut weight: impl FnMut(usize, usize) -> Fixed16,
        mut bias: impl FnMut(usize) -> Fixed16,
    ) -> Result<Self> {
        let mut weights = Vec::with_capacity(outputs * inputs);
        for o in 0..outputs {
            for c in 0..inputs {
                weights.push(weight(o, c));
            }
        }
        let bias = (0..outputs).map(&mut bias).collect();
        FullyConnected::new(outputs, inputs, weights, bias)
    }

    #[inline]
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn parameter_count(&self) -> u64 {
        self.weights.len() as u64 + self.bias.len() as u64
    }

    /// Exact matrix-vector product plus bias, narrowed once per output.
    pub fn apply(&self, x: &[Fixed16]) -> Result<Vec<Fixed16>> {
        if x.len() != self.inputs {
            return Err(Error::LengthMismatch {
                expected: self.inputs,
                actual: x.len(),
            });
        }
        Ok((0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                let acc: Acc40 = row.iter().zip(x).map(|(&w, &v)| w * v).sum();
                (acc + self.bias[o].widen()).narrow()
            })
            .collect())
    }
}

/// Exact matrix-vector product plus bias, narrowed once per output.
pub fn fully_connected(x: &[Fixed16], fc: &FullyConnected) -> Result<Vec<Fixed16>> {
    fc.apply(x)
}

fn check_channels(x: &FeatureMap, k: &KernelSet) -> Result<()> {
    if x.channels() != k.channels() {
        return Err(Error::ShapeMismatch {
            what: format!(
                "input has {} channels but kernels expect {}",
                x.channels(),
                k.channels()
            ),
        });
    }
    Ok(())
}

fn check_window_fits(x: &FeatureMap, k: &KernelSet) -> Result<()> {
    if k.kernel_h() > x.height() || k.kernel_w() > x.width() {
        return Err(Error::KernelTooLarge {
            h: x.height(),
            w: x.width(),
            kh: k.kernel_h(),
            kw: k.kernel_w(),
        });
    }
    Ok(())
}

/// `num / den` with round-to-nearest, ties to even; `den > 0`.
fn div_round_half_even(num: i64, den: i64) -> i64 {
    debug_assert!(den > 0);
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den); // in [0, den)
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q & 1 == 1 {
                q + 1
            } else {
                q
            }
        }
        std::cmp::Ordering::Less => q,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fm_from_reals(c: usize, h: usize, w: usize, vals: &[f64]) -> FeatureMap {
        let data = vals.iter().map(|&v| Fixed16::quantize(v)).collect();
        FeatureMap::new(c, h, w, data).unwrap()
    }

    fn random_fm(rng: &mut impl Rng, c: usize, h: usize, w: usize) -> FeatureMap {
        // Modest magnitudes keep most sums inside the narrowing range; the
        // comparisons below are bit-exact either way.
        FeatureMap::from_fn(c, h, w, |_, _, _| {
            Fixed16::from_raw(rng.gen_range(-1024..=1024))
        })
        .unwrap()
    }

    fn random_ks(rng: &mut impl Rng, m: usize, n: usize, kh: usize, kw: usize) -> KernelSet {
        let weights = (0..m * n * kh * kw)
            .map(|_| Fixed16::from_raw(rng.gen_range(-512..=512)))
            .collect();
        let bias = (0..m)
            .map(|_| Fixed16::from_raw(rng.gen_range(-512..=512)))
            .collect();
        KernelSet::new(m, n, kh, kw, weights, bias).unwrap()
    }

    /// Independent convolution oracle: gathers each window into a scratch
    /// vector and dot-multiplies in i128, with its own indexing arithmetic.
    fn conv_oracle(x: &FeatureMap, k: &KernelSet, sh: usize, sw: usize) -> Vec<i64> {
        let ho = (x.height() - k.kernel_h()) / sh + 1;
        let wo = (x.width() - k.kernel_w()) / sw + 1;
        let mut wide = Vec::new();
        for m in 0..k.kernels() {
            for oi in 0..ho {
                for oj in 0..wo {
                    let mut gathered: Vec<(i128, i128)> = Vec::new();
                    for n in 0..x.channels() {
                        for i in 0..k.kernel_h() {
                            for j in 0..k.kernel_w() {
                                let xi = x.plane(n)[(oi * sh + i) * x.width() + oj * sw + j];
                                let wi = k.channel_plane(m, n)[i * k.kernel_w() + j];
                                gathered.push((xi.raw() as i128, wi.raw() as i128));
                            }
                        }
                    }
                    let mut s: i128 = gathered.iter().map(|(a, b)| a * b).sum();
                    s += (k.bias(m).raw() as i128) << 8;
                    wide.push(i64::try_from(s).unwrap());
                }
            }
        }
        wide
    }

    #[test]
    fn identity_conv_is_identity() {
        let x = fm_from_reals(1, 1, 1, &[1.0]);
        let k = KernelSet::new(1, 1, 1, 1, vec![Fixed16::ONE], vec![Fixed16::ZERO]).unwrap();
        let y = conv_reference(&x, &k, 1, 1).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn ones_5x5_kernel3_stride2_gives_nine_everywhere() {
        let x = fm_from_reals(1, 5, 5, &[1.0; 25]);
        let k = KernelSet::new(1, 1, 3, 3, vec![Fixed16::ONE; 9], vec![Fixed16::ZERO]).unwrap();
        let y = conv_reference(&x, &k, 2, 2).unwrap();
        assert_eq!((y.channels(), y.height(), y.width()), (1, 2, 2));
        for &v in y.data() {
            assert_eq!(v.to_real(), 9.0);
        }
    }

    #[test]
    fn conv_reference_matches_independent_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xabc);
        let x = random_fm(&mut rng, 3, 8, 8);
        let k = random_ks(&mut rng, 4, 3, 3, 3);
        let got = conv_reference(&x, &k, 1, 1).unwrap();
        let wide = conv_oracle(&x, &k, 1, 1);
        let want: Vec<Fixed16> = wide.iter().map(|&v| Acc40::from_raw(v).narrow()).collect();
        assert_eq!(got.data(), &want[..]);
    }

    #[test]
    fn topleft_window_agrees_with_full_conv() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xdef);
        let x = random_fm(&mut rng, 3, 6, 7);
        let k = random_ks(&mut rng, 5, 3, 3, 3);
        let tl = conv_window_topleft(&x, &k).unwrap();
        let full = conv_reference(&x, &k, 1, 1).unwrap();
        for m in 0..k.kernels() {
            assert_eq!(tl[m].narrow(), full.get(m, 0, 0));
        }
    }

    #[test]
    fn topleft_with_zero_weights_passes_bias_through() {
        let x = fm_from_reals(2, 3, 3, &[0.25; 18]);
        let k = KernelSet::from_fn(
            3,
            2,
            3,
            3,
            |_, _, _, _| Fixed16::ZERO,
            |m| Fixed16::quantize(m as f64 - 1.0),
        )
        .unwrap();
        let tl = conv_window_topleft(&x, &k).unwrap();
        for m in 0..3 {
            assert_eq!(tl[m], k.bias(m).widen());
        }
    }

    #[test]
    fn partial_sum_examples_and_oracle() {
        // K=1: 2.0 * 0.5 = 1.0.
        let got = partial_sum(&[Fixed16::quantize(2.0)], &[Fixed16::quantize(0.5)]).unwrap();
        assert_eq!(got.to_real(), 1.0);
        // Zero kernel annihilates.
        let w: Vec<Fixed16> = (0..9).map(|i| Fixed16::from_raw(i * 7)).collect();
        assert_eq!(partial_sum(&w, &[Fixed16::ZERO; 9]).unwrap(), Acc40::ZERO);
        // Random 6x6 against i128 dot product.
        let mut rng = ChaCha8Rng::seed_from_u64(0x606);
        let a: Vec<Fixed16> = (0..36).map(|_| Fixed16::from_raw(rng.gen())).collect();
        let b: Vec<Fixed16> = (0..36).map(|_| Fixed16::from_raw(rng.gen())).collect();
        let want: i128 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x.raw() as i128 * y.raw() as i128)
            .sum();
        assert_eq!(partial_sum(&a, &b).unwrap().raw() as i128, want);
        // Mismatched shapes are rejected.
        assert!(partial_sum(&a[..4], &b).is_err());
    }

    #[test]
    fn channel_summation_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x707);
        let partials: Vec<Acc40> = (0..15)
            .map(|_| Acc40::from_raw(rng.gen_range(-1_000_000..1_000_000)))
            .collect();
        let bias = Fixed16::quantize(0.75);
        let base = sum_over_input_channels(&partials, bias);
        let mut reversed = partials.clone();
        reversed.reverse();
        assert_eq!(sum_over_input_channels(&reversed, bias), base);
        // N=1, a=0, b=1.0 -> 1.0
        assert_eq!(
            sum_over_input_channels(&[Acc40::ZERO], Fixed16::ONE).to_real(),
            1.0
        );
        // Sequential-sum oracle.
        let want = partials.iter().fold(0i64, |s, a| s + a.raw()) + ((bias.raw() as i64) << 8);
        assert_eq!(base.raw(), want);
    }

    #[test]
    fn accumulator_iteration_equals_per_channel_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x808);
        for _ in 0..50 {
            let n = rng.gen_range(1..=6);
            let m = rng.gen_range(1..=5);
            let k = rng.gen_range(1..=4);
            let x = random_fm(&mut rng, n, k + 1, k + 2);
            let ks = random_ks(&mut rng, m, n, k, k);
            let via_bank = accumulate_output_components(&x, &ks).unwrap();
            let via_sum = conv_window_topleft(&x, &ks).unwrap();
            assert_eq!(via_bank, via_sum);
        }
    }

    #[test]
    fn accumulator_iteration_on_zero_input_yields_bias() {
        let x = FeatureMap::zeros(4, 3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0x909);
        let ks = random_ks(&mut rng, 6, 4, 3, 3);
        let got = accumulate_output_components(&x, &ks).unwrap();
        for m in 0..6 {
            assert_eq!(got[m], ks.bias(m).widen());
        }
    }

    #[test]
    fn single_channel_accumulation_reduces_to_topleft() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xa0a);
        let x = random_fm(&mut rng, 1, 4, 4);
        let ks = random_ks(&mut rng, 3, 1, 3, 3);
        assert_eq!(
            accumulate_output_components(&x, &ks).unwrap(),
            conv_window_topleft(&x, &ks).unwrap()
        );
    }

    #[test]
    fn max_pool_examples() {
        let x = fm_from_reals(1, 2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let y = pool_max(&x, 2, 2).unwrap();
        assert_eq!(y.data(), &[Fixed16::quantize(4.0)]);

        let constant = fm_from_reals(1, 4, 4, &[0.5; 16]);
        let y = pool_max(&constant, 2, 2).unwrap();
        assert!(y.data().iter().all(|&v| v == Fixed16::quantize(0.5)));
    }

    #[test]
    fn max_pool_matches_bruteforce_on_random_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xb0b);
        let x = random_fm(&mut rng, 2, 6, 6);
        let y = pool_max(&x, 2, 2).unwrap();
        for n in 0..2 {
            for oi in 0..3 {
                for oj in 0..3 {
                    let mut want = i16::MIN;
                    for i in 0..2 {
                        for j in 0..2 {
                            want = want.max(x.get(n, 2 * oi + i, 2 * oj + j).raw());
                        }
                    }
                    assert_eq!(y.get(n, oi, oj).raw(), want);
                }
            }
        }
    }

    #[test]
    fn average_pool_of_constant_plane_is_constant() {
        let x = fm_from_reals(1, 4, 4, &[1.5; 16]);
        let y = pool(&x, PoolKind::Average, 2, 2).unwrap();
        assert!(y.data().iter().all(|&v| v == Fixed16::quantize(1.5)));
    }

    #[test]
    fn relu_examples_and_mask_property() {
        let x = fm_from_reals(1, 1, 2, &[-1.0, 2.5]);
        let y = activation(&x, ActivationKind::Relu);
        assert_eq!(y.data()[0].to_real(), 0.0);
        assert_eq!(y.data()[1].to_real(), 2.5);

        let mut rng = ChaCha8Rng::seed_from_u64(0xc0c);
        let x = random_fm(&mut rng, 2, 5, 5);
        let y = activation(&x, ActivationKind::Relu);
        for (a, b) in x.data().iter().zip(y.data()) {
            if a.raw() >= 0 {
                assert_eq!(a, b);
            } else {
                assert_eq!(b.raw(), 0);
            }
        }
        assert_eq!(activation(&x, ActivationKind::Identity).data(), x.data());
    }

    #[test]
    fn fully_connected_examples() {
        // 1x1 identity weight passes through.
        let fc = FullyConnected::new(1, 1, vec![Fixed16::ONE], vec![Fixed16::ZERO]).unwrap();
        let x = [Fixed16::quantize(-3.25)];
        assert_eq!(fc.apply(&x).unwrap(), vec![x[0]]);

        // Zero weights pass the bias through.
        let fc =
            FullyConnected::from_fn(3, 4, |_, _| Fixed16::ZERO, |o| Fixed16::quantize(o as f64))
                .unwrap();
        let x = [Fixed16::ONE; 4];
        let y = fc.apply(&x).unwrap();
        for (o, v) in y.iter().enumerate() {
            assert_eq!(v.to_real(), o as f64);
        }
    }

    #[test]
    fn fully_connected_320_to_10_matches_wide_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xd0d);
        let weights = (0..10 * 320)
            .map(|_| Fixed16::from_raw(rng.gen_range(-512..=512)))
            .collect();
        let bias = (0..10)
            .map(|_| Fixed16::from_raw(rng.gen_range(-512..=512)))
            .collect();
        let fc = FullyConnected::new(10, 320, weights, bias).unwrap();
        assert_eq!(fc.parameter_count(), 3210);
        let x: Vec<Fixed16> = (0..320)
            .map(|_| Fixed16::from_raw(rng.gen_range(-1024..=1024)))
            .collect();
        let got = fc.apply(&x).unwrap();
        for o in 0..10 {
            let mut s: i128 = 0;
            for c in 0..320 {
                s += fc.weights[o * 320 + c].raw() as i128 * x[c].raw() as i128;
            }
            s += (fc.bias[o].raw() as i128) << 8;
            assert_eq!(got[o], Acc40::from_raw(i64::try_from(s).unwrap()).narrow());
        }
        // Shape mismatch is rejected.
        assert!(fc.apply(&x[..300]).is_err());
    }

    #[test]
    fn conv_is_linear_in_the_input_before_narrowing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xe0e);
        // Small values so no saturation can occur anywhere.
        let x1 = FeatureMap::from_fn(2, 4, 4, |_, _, _| {
            Fixed16::from_raw(rng.gen_range(-64..=64))
        })
        .unwrap();
        let x2 = FeatureMap::from_fn(2, 4, 4, |_, _, _| {
            Fixed16::from_raw(rng.gen_range(-64..=64))
        })
        .unwrap();
        let sum = FeatureMap::from_fn(2, 4, 4, |n, i, j| {
            Fixed16::from_raw(x1.get(n, i, j).raw() + x2.get(n, i, j).raw())
        })
        .unwrap();
        let k = KernelSet::from_fn(
            2,
            2,
            3,
            3,
            |_, _, _, _| Fixed16::from_raw(rng.gen_range(-64..=64)),
            |_| Fixed16::ZERO,
        )
        .unwrap();
        let a = conv_window_topleft(&x1, &k).unwrap();
        let b = conv_window_topleft(&x2, &k).unwrap();
        let c = conv_window_topleft(&sum, &k).unwrap();
        for m in 0..2 {
            assert_eq!(c[m], a[m] + b[m]);
        }
    }

    #[test]
    fn rounding_division_ties_to_even() {
        assert_eq!(div_round_half_even(5, 2), 2);
        assert_eq!(div_round_half_even(7, 2), 4);
        assert_eq!(div_round_half_even(-5, 2), -2);
        assert_eq!(div_round_half_even(-7, 2), -4);
        assert_eq!(div_round_half_even(10, 4), 2);
    }
}
