//! Dilated 1-D convolutional network with hand-written backpropagation.
//!
//! ```text
//! x0 = c_in * z
//! h0 = silu(conv0(x0) + e0)
//! h1 = h0 + silu(conv1(h0) + e1)      dilation 2
//! h2 = h1 + silu(conv2(h1) + e2)      dilation 4
//! h3 = h2 + silu(conv3(h2) + e3)      dilation 8
//! D  = c_skip * z + c_out * conv4(h3)
//! e_l = W_l * fourier(ln(sigma) / 4) + E_l[cond]
//! ```

use crate::Real;

pub(crate) const KERNEL: usize = 3;
const HIDDEN_LAYERS: usize = 4;
const OUT: usize = HIDDEN_LAYERS;
const DILATIONS: [usize; HIDDEN_LAYERS + 1] = [1, 2, 4, 8, 1];

/// Shape descriptor of the denoiser network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetConfig {
    /// Latent channels of one codec group.
    pub channels: usize,
    pub hidden: usize,
    /// Number of Fourier frequencies for the noise level (2x features).
    pub fourier: usize,
    /// Vocabulary size including the null row.
    pub vocab: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }
}

struct Offsets {
    conv_w: [usize; HIDDEN_LAYERS + 1],
    conv_b: [usize; HIDDEN_LAYERS + 1],
    time_w: [usize; HIDDEN_LAYERS],
    cond: [usize; HIDDEN_LAYERS],
}

impl NetConfig {
    fn conv_dims(&self, l: usize) -> (usize, usize) {
        match l {
            0 => (self.channels, self.hidden),
            OUT => (self.hidden, self.channels),
            _ => (self.hidden, self.hidden),
        }
    }

    pub(crate) fn tensors(&self) -> Vec<TensorSpec> {
        let mut out = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, shape: Vec<usize>| {
            let spec = TensorSpec { name, shape, offset };
            offset += spec.len();
            out.push(spec);
        };
        for l in 0..=OUT {
            let (cin, cout) = self.conv_dims(l);
            push(format!("conv{l}.weight"), vec![cout, cin, KERNEL]);
            push(format!("conv{l}.bias"), vec![cout]);
        }
        for l in 0..HIDDEN_LAYERS {
            push(format!("time{l}.weight"), vec![self.hidden, 2 * self.fourier]);
            push(format!("cond{l}.table"), vec![self.vocab, self.hidden]);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(TensorSpec::len).sum()
    }

    fn offsets(&self) -> Offsets {
        let t = self.tensors();
        let base = 2 * (OUT + 1);
        Offsets {
            conv_w: std::array::from_fn(|l| t[2 * l].offset),
            conv_b: std::array::from_fn(|l| t[2 * l + 1].offset),
            time_w: std::array::from_fn(|l| t[base + 2 * l].offset),
            cond: std::array::from_fn(|l| t[base + 2 * l + 1].offset),
        }
    }

    /// Fan-in scaled Gaussian weights, zero biases, small embeddings.
    pub(crate) fn init_params<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f32> {
        let mut p = vec![0.0f32; self.param_count()];
        for spec in self.tensors() {
            let std = if spec.name.ends_with(".bias") {
                0.0
            } else if spec.name == format!("conv{OUT}.weight") {
                0.2 / ((spec.shape[1] * KERNEL) as f64).sqrt()
            } else if spec.name.starts_with("conv") {
                (2.0 / (spec.shape[1] * KERNEL) as f64).sqrt()
            } else if spec.name.starts_with("time") {
                1.0 / (spec.shape[1] as f64).sqrt()
            } else {
                0.1
            };
            for v in &mut p[spec.offset..spec.offset + spec.len()] {
                *v = (std * f64::standard_normal(rng)) as f32;
            }
        }
        p
    }
}

/// EDM preconditioning coefficients `(c_skip, c_out, c_in)`.
pub(crate) fn precondition<T: Real>(sigma: T, sigma_data: T) -> (T, T, T) {
    let sd2 = sigma_data * sigma_data;
    let total = sigma * sigma + sd2;
    let root = total.sqrt();
    (sd2 / total, sigma * sigma_data / root, T::one() / root)
}

fn fourier<T: Real>(sigma: T, count: usize) -> Vec<T> {
    let c_noise = sigma.ln() / T::lit(4.0);
    let mut phi = Vec::with_capacity(2 * count);
    for j in 0..count {
        let arg = T::lit(0.5 * (1u64 << j) as f64) * c_noise;
        phi.push(arg.sin());
        phi.push(arg.cos());
    }
    phi
}

fn sigmoid<T: Real>(a: T) -> T {
    T::one() / (T::one() + (-a).exp())
}

fn silu<T: Real>(a: T) -> T {
    a * sigmoid(a)
}

fn silu_grad<T: Real>(a: T) -> T {
    let s = sigmoid(a);
    s * (T::one() + a * (T::one() - s))
}

/// Index range of `t` for which `t + shift` lies in `0..len`.
fn valid(len: usize, shift: isize) -> (usize, usize) {
    let lo = (-shift).max(0) as usize;
    let hi = (len as isize - shift.max(0)).max(0) as usize;
    (lo.min(hi), hi)
}

fn tap_shift(k: usize, dilation: usize) -> isize {
    (k as isize - 1) * dilation as isize
}

#[allow(clippy::too_many_arguments)]
fn conv_forward<T: Real>(w: &[T], b: &[T], x: &[T], cin: usize, cout: usize, len: usize, dil: usize, y: &mut [T]) {
    for o in 0..cout {
        let yo = &mut y[o * len..(o + 1) * len];
        yo.fill(b[o]);
        for c in 0..cin {
            let xc = &x[c * len..(c + 1) * len];
            for k in 0..KERNEL {
                let wv = w[(o * cin + c) * KERNEL + k];
                let shift = tap_shift(k, dil);
                let (lo, hi) = valid(len, shift);
                if lo >= hi {
                    continue;
                }
                let src = &xc[(lo as isize + shift) as usize..(hi as isize + shift) as usize];
                for (yv, &xv) in yo[lo..hi].iter_mut().zip(src) {
                    *yv += wv * xv;
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn conv_backward<T: Real>(
    w: &[T],
    x: &[T],
    gy: &[T],
    cin: usize,
    cout: usize,
    len: usize,
    dil: usize,
    gw: &mut [T],
    gb: &mut [T],
    mut gx: Option<&mut [T]>,
) {
    for o in 0..cout {
        let gyo = &gy[o * len..(o + 1) * len];
        gb[o] += gyo.iter().copied().sum::<T>();
        for c in 0..cin {
            let xc = &x[c * len..(c + 1) * len];
            for k in 0..KERNEL {
                let widx = (o * cin + c) * KERNEL + k;
                let shift = tap_shift(k, dil);
                let (lo, hi) = valid(len, shift);
                if lo >= hi {
                    continue;
                }
                let (s0, s1) = ((lo as isize + shift) as usize, (hi as isize + shift) as usize);
                let mut acc = T::zero();
                for (&g, &xv) in gyo[lo..hi].iter().zip(&xc[s0..s1]) {
                    acc += g * xv;
                }
                gw[widx] += acc;
                if let Some(gx) = gx.as_deref_mut() {
                    let wv = w[widx];
                    for (gxv, &g) in gx[c * len + s0..c * len + s1].iter_mut().zip(&gyo[lo..hi]) {
                        *gxv += wv * g;
                    }
                }
            }
        }
    }
}

fn add_into<T: Real>(acc: &mut [T], v: &[T]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

pub(crate) struct Trace<T> {
    x0: Vec<T>,
    pre: [Vec<T>; HIDDEN_LAYERS],
    hid: [Vec<T>; HIDDEN_LAYERS],
    phi: Vec<T>,
    c_out: T,
}

fn embedding<T: Real>(cfg: &NetConfig, p: &[T], off: &Offsets, l: usize, phi: &[T], cond: usize) -> Vec<T> {
    let f2 = phi.len();
    (0..cfg.hidden)
        .map(|o| {
            let row = &p[off.time_w[l] + o * f2..off.time_w[l] + (o + 1) * f2];
            let t: T = row.iter().zip(phi).map(|(&w, &f)| w * f).sum();
            t + p[off.cond[l] + cond * cfg.hidden + o]
        })
        .collect()
}

/// Denoised output for one `channels x len` group.
#[allow(clippy::too_many_arguments)]
pub(crate) fn forward<T: Real>(
    cfg: &NetConfig,
    p: &[T],
    z: &[T],
    len: usize,
    sigma: T,
    sigma_data: T,
    cond: usize,
) -> (Vec<T>, Trace<T>) {
    debug_assert_eq!(z.len(), cfg.channels * len);
    debug_assert_eq!(p.len(), cfg.param_count());
    let off = cfg.offsets();
    let (c_skip, c_out, c_in) = precondition(sigma, sigma_data);
    let phi = fourier(sigma, cfg.fourier);
    let x0: Vec<T> = z.iter().map(|&v| c_in * v).collect();
    let h = cfg.hidden;
    let mut pre: [Vec<T>; HIDDEN_LAYERS] = std::array::from_fn(|_| vec![T::zero(); h * len]);
    let mut hid: [Vec<T>; HIDDEN_LAYERS] = std::array::from_fn(|_| vec![T::zero(); h * len]);
    for l in 0..HIDDEN_LAYERS {
        let (cin, cout) = cfg.conv_dims(l);
        let wl = &p[off.conv_w[l]..off.conv_w[l] + cout * cin * KERNEL];
        let bl = &p[off.conv_b[l]..off.conv_b[l] + cout];
        let input: &[T] = if l == 0 { &x0 } else { &hid[l - 1] };
        let mut a = vec![T::zero(); cout * len];
        conv_forward(wl, bl, input, cin, cout, len, DILATIONS[l], &mut a);
        let e = embedding(cfg, p, &off, l, &phi, cond);
        for o in 0..cout {
            for v in &mut a[o * len..(o + 1) * len] {
                *v += e[o];
            }
        }
        let mut out = if l == 0 { vec![T::zero(); h * len] } else { hid[l - 1].clone() };
        for (ov, &av) in out.iter_mut().zip(&a) {
            *ov += silu(av);
        }
        pre[l] = a;
        hid[l] = out;
    }
    let (cin, cout) = cfg.conv_dims(OUT);
    let mut f = vec![T::zero(); cout * len];
    conv_forward(
        &p[off.conv_w[OUT]..off.conv_w[OUT] + cout * cin * KERNEL],
        &p[off.conv_b[OUT]..off.conv_b[OUT] + cout],
        &hid[HIDDEN_LAYERS - 1],
        cin,
        cout,
        len,
        DILATIONS[OUT],
        &mut f,
    );
    let d = z.iter().zip(&f).map(|(&zv, &fv)| c_skip * zv + c_out * fv).collect();
    (d, Trace { x0, pre, hid, phi, c_out })
}

/// Accumulates `d(loss)/d(params)` into `grad` given `g = d(loss)/dD`.
pub(crate) fn backward<T: Real>(
    cfg: &NetConfig,
    p: &[T],
    trace: &Trace<T>,
    g: &[T],
    len: usize,
    cond: usize,
    grad: &mut [T],
) {
    let off = cfg.offsets();
    let h = cfg.hidden;
    let gf: Vec<T> = g.iter().map(|&v| trace.c_out * v).collect();
    let (cin, cout) = cfg.conv_dims(OUT);
    let mut gh = vec![T::zero(); h * len];
    let wlen = cout * cin * KERNEL;
    let mut gw = vec![T::zero(); wlen];
    let mut gb = vec![T::zero(); cout];
    conv_backward(
        &p[off.conv_w[OUT]..off.conv_w[OUT] + wlen],
        &trace.hid[HIDDEN_LAYERS - 1],
        &gf,
        cin,
        cout,
        len,
        DILATIONS[OUT],
        &mut gw,
        &mut gb,
        Some(&mut gh),
    );
    add_into(&mut grad[off.conv_w[OUT]..off.conv_w[OUT] + wlen], &gw);
    add_into(&mut grad[off.conv_b[OUT]..off.conv_b[OUT] + cout], &gb);
    for l in (0..HIDDEN_LAYERS).rev() {
        let (cin, cout) = cfg.conv_dims(l);
        let ga: Vec<T> = gh.iter().zip(&trace.pre[l]).map(|(&gv, &a)| gv * silu_grad(a)).collect();
        let f2 = trace.phi.len();
        for o in 0..cout {
            let s: T = ga[o * len..(o + 1) * len].iter().copied().sum();
            for (j, &ph) in trace.phi.iter().enumerate() {
                grad[off.time_w[l] + o * f2 + j] += s * ph;
            }
            grad[off.cond[l] + cond * h + o] += s;
        }
        let input: &[T] = if l == 0 { &trace.x0 } else { &trace.hid[l - 1] };
        let mut gin = if l == 0 { Vec::new() } else { gh.clone() };
        let wlen = cout * cin * KERNEL;
        let mut gw = vec![T::zero(); wlen];
        let mut gb = vec![T::zero(); cout];
        conv_backward(
            &p[off.conv_w[l]..off.conv_w[l] + wlen],
            input,
            &ga,
            cin,
            cout,
            len,
            DILATIONS[l],
            &mut gw,
            &mut gb,
            if l == 0 { None } else { Some(&mut gin) },
        );
        add_into(&mut grad[off.conv_w[l]..off.conv_w[l] + wlen], &gw);
        add_into(&mut grad[off.conv_b[l]..off.conv_b[l] + cout], &gb);
        gh = gin;
    }
}

/// Preconditioned L2 objective `mean((D(z0 + sigma n) - z0)^2) / c_out^2` and
/// its parameter gradient.
#[allow(clippy::too_many_arguments)]
pub fn loss_and_grad<T: Real>(
    cfg: &NetConfig,
    p: &[T],
    z0: &[T],
    noise: &[T],
    len: usize,
    sigma: T,
    sigma_data: T,
    cond: usize,
) -> (T, Vec<T>) {
    let mut grad = vec![T::zero(); p.len()];
    let loss = accumulate(cfg, p, z0, noise, len, sigma, sigma_data, cond, &mut grad);
    (loss, grad)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn accumulate<T: Real>(
    cfg: &NetConfig,
    p: &[T],
    z0: &[T],
    noise: &[T],
    len: usize,
    sigma: T,
    sigma_data: T,
    cond: usize,
    grad: &mut [T],
) -> T {
    let z: Vec<T> = z0.iter().zip(noise).map(|(&a, &n)| a + sigma * n).collect();
    let (d, trace) = forward(cfg, p, &z, len, sigma, sigma_data, cond);
    let weight = T::one() / (trace.c_out * trace.c_out);
    let scale = weight / T::lit(z.len() as f64);
    let mut loss = T::zero();
    let g: Vec<T> = d
        .iter()
        .zip(z0)
        .map(|(&dv, &tv)| {
            let r = dv - tv;
            loss += r * r;
            T::lit(2.0) * scale * r
        })
        .collect();
    backward(cfg, p, &trace, &g, len, cond, grad);
    loss * scale
}
