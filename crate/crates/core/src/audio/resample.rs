use std::f64::consts::PI;

use super::Waveform;

const ZERO_CROSSINGS: usize = 32;
const KAISER_BETA: f64 = 8.6;
const ROLLOFF: f64 = 0.945;
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

struct Kernel {
    cutoff: f64,
    half_width: f64,
    norm: f64,
}

impl Kernel {
    fn new(from: u32, to: u32) -> Self {
        let cutoff = ROLLOFF * (to as f64 / from as f64).min(1.0);
        Self {
            cutoff,
            half_width: ZERO_CROSSINGS as f64 / cutoff,
            norm: bessel_i0(KAISER_BETA),
        }
    }

    /// Tap weight at distance `x` input samples from the output instant.
    fn weight(&self, x: f64) -> f64 {
        let r = x / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let arg = PI * self.cutoff * x;
        let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.norm;
        self.cutoff * sinc * window
    }
}

/// Band-limited resampling with a Kaiser-windowed sinc kernel.
///
/// Output length is `round(len * to / from)`; resampling to the same rate
/// returns the input unchanged.
pub fn resample(audio: &Waveform, to_rate: u32) -> Waveform {
    let from = audio.sample_rate();
    if from == to_rate || to_rate == 0 {
        return audio.clone();
    }
    let out_len = (audio.len() as f64 * to_rate as f64 / from as f64).round() as usize;
    let kernel = Kernel::new(from, to_rate);
    let reach = kernel.half_width.ceil() as i64;
    let g = gcd(from as u64, to_rate as u64);
    let (up, down) = (to_rate as u64 / g, from as u64 / g);

    // Output j sits at input position j * down / up; with a rational ratio the
    // fractional part cycles through `up` phases, so taps can be tabulated.
    let taps = (2 * reach + 1) as usize;
    let table: Option<Vec<f64>> = (up <= MAX_TABLE_PHASES).then(|| {
        let mut t = vec![0.0; up as usize * taps];
        for phase in 0..up as usize {
            let frac = phase as f64 / up as f64;
            for k in 0..taps {
                let offset = k as i64 - reach;
                t[phase * taps + k] = kernel.weight(frac - offset as f64);
            }
        }
        t
    });

    let channels = audio
        .channels()
        .iter()
        .map(|x| {
            let n = x.len() as i64;
            (0..out_len as u64)
                .map(|j| {
                    let pos = j * down;
                    let base = (pos / up) as i64;
                    let phase = (pos % up) as usize;
                    let mut acc = 0.0f64;
                    for k in 0..taps {
                        let idx = base + k as i64 - reach;
                        if idx < 0 || idx >= n {
                            continue;
                        }
                        let w = match &table {
                            Some(t) => t[phase * taps + k],
                            None => {
                                let frac = phase as f64 / up as f64;
                                kernel.weight(frac - (k as i64 - reach) as f64)
                            }
                        };
                        acc += w * x[idx as usize] as f64;
                    }
                    acc as f32
                })
                .collect()
        })
        .collect();
    Waveform::new(to_rate, channels).expect("resampled channels share a length")
}
