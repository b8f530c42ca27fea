use crate::dispersion::{fourier_symbol, InteractionMatrix, SpectralPoint};
use crate::error::{Error, Result};
use crate::fft::TorusFft;
use crate::lattice::LatticeBox;
use crate::linalg::{hermitian_eigen, CMat, RMat, C64};

/// One sample (v0, v1) of the field on a periodic box, or on a half-box whose axis 0 is the
/// half-line {0, .., L-1} with the zero boundary at index 0.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    lbox: LatticeBox,
    n: usize,
    pub v0: Vec<f64>,
    pub v1: Vec<f64>,
    half_space: bool,
}

impl FieldState {
    pub fn zeros(lbox: LatticeBox, n: usize, half_space: bool) -> Self {
        let len = lbox.len() * n;
        Self { lbox, n, v0: vec![0.0; len], v1: vec![0.0; len], half_space }
    }

    /// Site-major arrays: entry `site * n + k`.
    pub fn new(lbox: LatticeBox, n: usize, v0: Vec<f64>, v1: Vec<f64>, half_space: bool) -> Result<Self> {
        let len = lbox.len() * n;
        if v0.len() != len || v1.len() != len {
            return Err(Error::InvalidBox(format!("expected {len} entries per field, got {} and {}", v0.len(), v1.len())));
        }
        let s = Self { lbox, n, v0, v1, half_space };
        if half_space && s.boundary_max() != 0.0 {
            return Err(Error::InvalidQuery("half-space state must vanish on z_1 = 0".into()));
        }
        Ok(s)
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lbox
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn is_half_space(&self) -> bool {
        self.half_space
    }

    pub fn displacement(&self, site: usize) -> &[f64] {
        &self.v0[site * self.n..(site + 1) * self.n]
    }

    pub fn velocity(&self, site: usize) -> &[f64] {
        &self.v1[site * self.n..(site + 1) * self.n]
    }

    /// Largest |v| over sites with first coordinate 0.
    pub fn boundary_max(&self) -> f64 {
        let mut m: f64 = 0.0;
        for site in 0..self.lbox.len() {
            if self.lbox.coord_of(site)[0] == 0 {
                for k in 0..self.n {
                    m = m.max(self.v0[site * self.n + k].abs()).max(self.v1[site * self.n + k].abs());
                }
            }
        }
        m
    }

    /// Weighted norm (sum (1+|z|^2)^alpha (|v0|^2 + |v1|^2))^{1/2} with centered coordinates.
    pub fn weighted_norm(&self, alpha: f64) -> f64 {
        let mut s = 0.0;
        for site in 0..self.lbox.len() {
            let z = if self.half_space { self.lbox.coord_of(site) } else { self.lbox.centered_coord(site) };
            let w = (1.0 + z.iter().map(|c| (c * c) as f64).sum::<f64>()).powf(alpha);
            let e: f64 = self.displacement(site).iter().chain(self.velocity(site)).map(|x| x * x).sum();
            s += w * e;
        }
        s.sqrt()
    }
}

/// G^_t(theta) in 2 x 2 block form.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorSymbol {
    pub theta: Vec<f64>,
    pub ghat: CMat,
}

/// sin(omega t) / omega with the removable singularity at omega = 0.
pub fn sin_over_omega(omega: f64, t: f64) -> f64 {
    if omega < 1e-6 {
        t - omega * omega * t * t * t / 6.0
    } else {
        (omega * t).sin() / omega
    }
}

fn assemble(n: usize, terms: impl Iterator<Item = (f64, CMat)>, t: f64) -> CMat {
    let mut g = CMat::zeros(2 * n, 2 * n);
    for (w, p) in terms {
        let c = C64::new((w * t).cos(), 0.0);
        let so = C64::new(sin_over_omega(w, t), 0.0);
        let ws = C64::new(-w * (w * t).sin(), 0.0);
        let mut b = g.view_mut((0, 0), (n, n));
        b += &p * c;
        let mut b = g.view_mut((0, n), (n, n));
        b += &p * so;
        let mut b = g.view_mut((n, 0), (n, n));
        b += &p * ws;
        let mut b = g.view_mut((n, n), (n, n));
        b += &p * c;
    }
    g
}

/// [[cos Omega t, Omega^{-1} sin Omega t], [-Omega sin Omega t, cos Omega t]] assembled band by band.
pub fn propagator_symbol(sp: &SpectralPoint, t: f64) -> PropagatorSymbol {
    let n = sp.n();
    let ghat = assemble(n, sp.bands.iter().map(|b| (b.omega, b.projector.clone())), t);
    PropagatorSymbol { theta: sp.theta.clone(), ghat }
}

/// Same block matrix built from the eigenvectors of V^ directly; needs no band separation.
pub fn propagator_from_symbol(vhat: &CMat, t: f64) -> CMat {
    let n = vhat.nrows();
    if n == 1 {
        let w = vhat[(0, 0)].re.max(0.0).sqrt();
        return assemble(1, std::iter::once((w, CMat::identity(1, 1))), t);
    }
    let (vals, vecs) = hermitian_eigen(vhat);
    assemble(
        n,
        vals.iter().enumerate().map(|(k, &l)| {
            let v = vecs.column(k);
            (l.max(0.0).sqrt(), &v * v.adjoint())
        }),
        t,
    )
}

/// G_t(z) on a box: per-entry real arrays, entry (row, col) at `components[row * 2n + col]`.
#[derive(Clone, Debug)]
pub struct GreenFunction {
    lbox: LatticeBox,
    n: usize,
    components: Vec<Vec<f64>>,
    max_imag: f64,
}

impl GreenFunction {
    pub fn lattice(&self) -> &LatticeBox {
        &self.lbox
    }

    pub fn components(&self) -> usize {
        self.n
    }

    /// Largest discarded imaginary part of the inverse transform.
    pub fn max_imag(&self) -> f64 {
        self.max_imag
    }

    pub fn entry(&self, row: usize, col: usize) -> &[f64] {
        &self.components[row * 2 * self.n + col]
    }

    pub fn at(&self, coord: &[i64]) -> RMat {
        let idx = self.lbox.index_of(coord);
        let m = 2 * self.n;
        RMat::from_fn(m, m, |r, c| self.components[r * m + c][idx])
    }

    /// (sum_z |G_t(z)|_F^2)^{1/2}
    pub fn l2_norm(&self) -> f64 {
        self.components.iter().flat_map(|c| c.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }
}

pub(crate) fn symbol_grid(v: &InteractionMatrix, lbox: &LatticeBox, t: f64) -> Vec<CMat> {
    (0..lbox.len()).map(|idx| propagator_from_symbol(&fourier_symbol(v, &lbox.theta(idx)), t)).collect()
}

pub(crate) fn check_box(v: &InteractionMatrix, lbox: &LatticeBox) -> Result<()> {
    if lbox.dim() != v.dim() {
        return Err(Error::InvalidBox(format!("box dimension {} != lattice dimension {}", lbox.dim(), v.dim())));
    }
    let diam = 2 * v.radius() as usize + 1;
    if let Some(&l) = lbox.extent().iter().find(|&&l| l < diam) {
        return Err(Error::InvalidBox(format!("extent {l} smaller than support diameter {diam}")));
    }
    Ok(())
}

/// G_t = F^{-1}[exp(A^ t)] on the box grid.
pub fn green_function(v: &InteractionMatrix, t: f64, lbox: &LatticeBox) -> Result<GreenFunction> {
    if lbox.extent().iter().any(|l| !l.is_power_of_two()) {
        return Err(Error::InvalidBox(format!("extent {:?} must be powers of two", lbox.extent())));
    }
    check_box(v, lbox)?;
    let n = v.components();
    let m = 2 * n;
    let symbols = symbol_grid(v, lbox, t);
    let fft = TorusFft::new(lbox);
    let mut components = Vec::with_capacity(m * m);
    let mut max_imag: f64 = 0.0;
    for r in 0..m {
        for c in 0..m {
            let mut buf: Vec<C64> = symbols.iter().map(|g| g[(r, c)]).collect();
            fft.from_symbol(&mut buf);
            max_imag = buf.iter().fold(max_imag, |a, z| a.max(z.im.abs()));
            components.push(buf.iter().map(|z| z.re).collect());
        }
    }
    Ok(GreenFunction { lbox: lbox.clone(), n, components, max_imag })
}

fn evolve_periodic(v: &InteractionMatrix, lbox: &LatticeBox, n: usize, v0: &[f64], v1: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
    let fft = TorusFft::new(lbox);
    let len = lbox.len();
    let mut hat: Vec<Vec<C64>> = (0..2 * n)
        .map(|k| {
            let src = if k < n { v0 } else { v1 };
            let comp = k % n;
            let mut buf: Vec<C64> = (0..len).map(|s| C64::new(src[s * n + comp], 0.0)).collect();
            fft.to_symbol(&mut buf);
            buf
        })
        .collect();
    let symbols = symbol_grid(v, lbox, t);
    let mut x = vec![C64::new(0.0, 0.0); 2 * n];
    for (idx, g) in symbols.iter().enumerate() {
        for r in 0..2 * n {
            x[r] = (0..2 * n).map(|c| g[(r, c)] * hat[c][idx]).sum();
        }
        for r in 0..2 * n {
            hat[r][idx] = x[r];
        }
    }
    let mut out0 = vec![0.0; len * n];
    let mut out1 = vec![0.0; len * n];
    for (k, buf) in hat.iter_mut().enumerate() {
        fft.from_symbol(buf);
        let dst = if k < n { &mut out0 } else { &mut out1 };
        for s in 0..len {
            dst[s * n + k % n] = buf[s].re;
        }
    }
    (out0, out1)
}

/// X(t) = sum_z' G_t(z - z') X0(z') on the periodic box.
pub fn evolve(v: &InteractionMatrix, x0: &FieldState, t: f64) -> Result<FieldState> {
    if x0.half_space {
        return Err(Error::InvalidQuery("evolve expects a full-space state; use evolve_halfspace".into()));
    }
    check_box(v, &x0.lbox)?;
    if x0.n != v.components() {
        return Err(Error::InvalidParameter { name: "state", reason: "component count differs from V".into() });
    }
    let (v0, v1) = evolve_periodic(v, &x0.lbox, x0.n, &x0.v0, &x0.v1, t);
    Ok(FieldState { lbox: x0.lbox.clone(), n: x0.n, v0, v1, half_space: false })
}

/// Zero-boundary evolution on the half-box via the odd extension across z_1 = 0.
pub fn evolve_halfspace(v: &InteractionMatrix, y0: &FieldState, t: f64) -> Result<FieldState> {
    if !v.symmetry_flag() {
        return Err(Error::ModelViolation);
    }
    if !y0.half_space {
        return Err(Error::InvalidQuery("evolve_halfspace expects a half-space state".into()));
    }
    let n = y0.n;
    let half = &y0.lbox;
    let mut ext = half.extent().to_vec();
    ext[0] *= 2;
    let full = LatticeBox::new(ext)?;
    check_box(v, &full)?;
    let len = full.len();
    let mut e0 = vec![0.0; len * n];
    let mut e1 = vec![0.0; len * n];
    for site in 0..half.len() {
        let z = half.coord_of(site);
        if z[0] == 0 {
            continue;
        }
        let mut mirror = z.clone();
        mirror[0] = -z[0];
        let (a, b) = (full.index_of(&z), full.index_of(&mirror));
        for k in 0..n {
            e0[a * n + k] = y0.v0[site * n + k];
            e1[a * n + k] = y0.v1[site * n + k];
            e0[b * n + k] = -y0.v0[site * n + k];
            e1[b * n + k] = -y0.v1[site * n + k];
        }
    }
    let (f0, f1) = evolve_periodic(v, &full, n, &e0, &e1, t);
    let mut out = FieldState::zeros(half.clone(), n, true);
    for site in 0..half.len() {
        let z = half.coord_of(site);
        let mut mirror = z.clone();
        mirror[0] = -z[0];
        let (a, b) = (full.index_of(&z), full.index_of(&mirror));
        for k in 0..n {
            // odd projection; exact zero on the boundary plane
            out.v0[site * n + k] = 0.5 * (f0[a * n + k] - f0[b * n + k]);
            out.v1[site * n + k] = 0.5 * (f1[a * n + k] - f1[b * n + k]);
        }
    }
    Ok(out)
}

/// 1/2 sum |v1|^2 + 1/2 sum v0 . (V * v0), periodic convolution.
pub fn hamiltonian(v: &InteractionMatrix, x: &FieldState) -> f64 {
    let n = x.n;
    let lbox = &x.lbox;
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for site in 0..lbox.len() {
        kinetic += x.velocity(site).iter().map(|a| a * a).sum::<f64>();
        let z = lbox.coord_of(site);
        let u0 = x.displacement(site);
        for (off, m) in v.support() {
            let src: Vec<i64> = z.iter().zip(off).map(|(a, b)| a - b).collect();
            let w = x.displacement(lbox.index_of(&src));
            for i in 0..n {
                for j in 0..n {
                    potential += u0[i] * m[(i, j)] * w[j];
                }
            }
        }
    }
    0.5 * (kinetic + potential)
}
