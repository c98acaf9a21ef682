//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-13, rel: 1e-12, max_intervals: 4000 }
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]`, splitting first at the supplied interior
/// breakpoints (kinks or jumps of the integrand).
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0, intervals: 0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);

    // (lo, hi, value, error)
    let mut pieces: Vec<(f64, f64, f64, f64)> = edges
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();

    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= tol.abs.max(tol.rel * total.abs()) || pieces.len() >= tol.max_intervals {
            return Integral { value: sign * total, error: err, intervals: pieces.len() };
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (l, r, _, _) = pieces.swap_remove(worst);
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            // interval cannot be split further in f64
            let total: f64 = pieces.iter().map(|p| p.2).sum::<f64>() + gk15(&mut f, l, r).0;
            return Integral { value: sign * total, error: err, intervals: pieces.len() + 1 };
        }
        let (v1, e1) = gk15(&mut f, l, m);
        let (v2, e2) = gk15(&mut f, m, r);
        pieces.push((l, m, v1, e1));
        pieces.push((m, r, v2, e2));
    }
}

pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64) -> Integral {
    integrate_with_breaks(f, a, b, &[], Tolerance::default())
}

/// Fixed composite Gauss–Kronrod rule on `panels` equal panels. Useful for
/// oscillatory integrands where the panel width is chosen from the frequency.
pub fn composite<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let l = a + i as f64 * h;
            gk15(&mut f, l, l + h).0
        })
        .sum()
}
