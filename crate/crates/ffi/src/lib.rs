//! C ABI over the `ginivar` library.
//!
//! Every fallible function returns a [`GvStatus`]. On failure the message is
//! kept per thread and can be read with [`gv_last_error`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ginivar::analysis::{posterior_irf_bands, IrfBands, IrfSpec};
use ginivar::cli::RunConfig;
use ginivar::data::Dataset;
use ginivar::experiments::{generate_synthetic_dataset, simulate_lorenz_comparison, SyntheticTruth};
use ginivar::sampler::{run_joint_mcmc, run_twostep, PosteriorDraws, PriorOverrides, Priors, SamplerConfig};
use ginivar::{stats, Error, ErrorKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GvStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or an index out of range.
    InvalidArgument = 1,
    /// Input or configuration rejected by the library.
    Validation = 2,
    Numerical = 3,
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// Dataset together with the priors and sampler settings used to fit it.
pub struct GvDataset {
    data: Dataset,
    priors: Priors,
    sampler: SamplerConfig,
}

pub struct GvDraws(PosteriorDraws);

pub struct GvBands(IrfBands);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Fail {
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F>(f: F) -> GvStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GvStatus::Ok,
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            GvStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            match e.kind() {
                ErrorKind::Input => GvStatus::Validation,
                ErrorKind::Numerical => GvStatus::Numerical,
                ErrorKind::Io => GvStatus::Io,
            }
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            GvStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail::Arg(format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail::Arg(format!("{name} is null")))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Arg(format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{name} is not valid UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Arg(format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn gv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn gv_gini_from_sigma(sigma: f64, out: *mut f64) -> GvStatus {
    guard(|| {
        *out_ref(out, "out")? = stats::gini_from_sigma(sigma)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn gv_sigma_from_gini(gini: f64, out: *mut f64) -> GvStatus {
    guard(|| {
        *out_ref(out, "out")? = stats::sigma_from_gini(gini)?;
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn gv_lognormal_lorenz(sigma: f64, p: f64, out: *mut f64) -> GvStatus {
    guard(|| {
        *out_ref(out, "out")? = stats::lognormal_lorenz(sigma, p)?;
        Ok(())
    })
}

/// Gini of grouped data from cumulative population shares and group means.
///
/// # Safety
/// `shares` and `means` must each point to `len` readable values.
#[no_mangle]
pub unsafe extern "C" fn gv_grouped_gini(
    shares: *const f64,
    means: *const f64,
    len: usize,
    out: *mut f64,
) -> GvStatus {
    guard(|| {
        let s = slice(shares, len, "shares")?;
        let m = slice(means, len, "means")?;
        *out_ref(out, "out")? = stats::grouped_gini(s, m)?;
        Ok(())
    })
}

/// # Safety
/// `values` must point to `len` readable values.
#[no_mangle]
pub unsafe extern "C" fn gv_sample_gini(values: *const f64, len: usize, out: *mut f64) -> GvStatus {
    guard(|| {
        let v = slice(values, len, "values")?;
        *out_ref(out, "out")? = stats::sample_gini(v)?;
        Ok(())
    })
}

/// Closed-form and grouped Gini of `n_obs` simulated lognormal incomes.
///
/// # Safety
/// `true_gini` and `grouped_gini` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn gv_simulate_lorenz(
    mu: f64,
    sigma: f64,
    n_obs: usize,
    n_groups: usize,
    seed: u64,
    true_gini: *mut f64,
    grouped_gini: *mut f64,
) -> GvStatus {
    guard(|| {
        let t = out_ref(true_gini, "true_gini")?;
        let g = out_ref(grouped_gini, "grouped_gini")?;
        let r = simulate_lorenz_comparison(mu, sigma, n_obs, n_groups, seed)?;
        *t = r.true_gini;
        *g = r.grouped_gini;
        Ok(())
    })
}

/// Loads income and macro data named by a JSON run configuration.
///
/// # Safety
/// `config_path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gv_dataset_load(config_path: *const c_char, out: *mut *mut GvDataset) -> GvStatus {
    guard(|| {
        let path = c_str(config_path, "config_path")?;
        let slot = out_ref(out, "out")?;
        let cfg = RunConfig::from_file(Path::new(path))?;
        cfg.sampler.validate()?;
        let data = cfg.load_dataset()?;
        let priors = cfg.priors.build(data.dim())?;
        *slot = boxed(GvDataset {
            data,
            priors,
            sampler: cfg.sampler.clone(),
        });
        Ok(())
    })
}

/// Built-in three-variable synthetic dataset with default priors and settings.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gv_dataset_synthetic(seed: u64, out: *mut *mut GvDataset) -> GvStatus {
    guard(|| {
        let slot = out_ref(out, "out")?;
        let data = generate_synthetic_dataset(&SyntheticTruth::fixture(seed))?.dataset;
        let priors = PriorOverrides::default().build(data.dim())?;
        *slot = boxed(GvDataset {
            data,
            priors,
            sampler: SamplerConfig::default(),
        });
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gv_dataset_periods(ds: *const GvDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.periods())
}

/// # Safety
/// `ds` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gv_dataset_dim(ds: *const GvDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.data.dim())
}

/// # Safety
/// `ds` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gv_dataset_free(ds: *mut GvDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

fn chain_config(base: &SamplerConfig, burn_in: usize, draws: usize, thin: usize) -> SamplerConfig {
    let mut c = base.clone();
    if burn_in > 0 {
        c.burn_in = burn_in;
    }
    if draws > 0 {
        c.draws = draws;
    }
    if thin > 0 {
        c.thin = thin;
    }
    c
}

/// Joint sampler. A zero `burn_in`, `draws` or `thin` keeps the dataset's setting.
///
/// # Safety
/// `ds` must be a handle from this library and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gv_run_joint(
    ds: *const GvDataset,
    seed: u64,
    burn_in: usize,
    draws: usize,
    thin: usize,
    out: *mut *mut GvDraws,
) -> GvStatus {
    guard(|| {
        let d = handle(ds, "ds")?;
        let slot = out_ref(out, "out")?;
        let cfg = chain_config(&d.sampler, burn_in, draws, thin);
        *slot = boxed(GvDraws(run_joint_mcmc(&d.data, &d.priors, &cfg, seed)?));
        Ok(())
    })
}

/// Two-step sampler with the log-variance path fixed at its static fits.
///
/// # Safety
/// `ds` must be a handle from this library and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gv_run_twostep(
    ds: *const GvDataset,
    seed: u64,
    burn_in: usize,
    draws: usize,
    thin: usize,
    out: *mut *mut GvDraws,
) -> GvStatus {
    guard(|| {
        let d = handle(ds, "ds")?;
        let slot = out_ref(out, "out")?;
        let cfg = chain_config(&d.sampler, burn_in, draws, thin);
        *slot = boxed(GvDraws(run_twostep(&d.data, &d.priors, &cfg, seed)?));
        Ok(())
    })
}

/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gv_draws_read(dir: *const c_char, out: *mut *mut GvDraws) -> GvStatus {
    guard(|| {
        let dir = c_str(dir, "dir")?;
        let slot = out_ref(out, "out")?;
        *slot = boxed(GvDraws(PosteriorDraws::read_dir(Path::new(dir))?));
        Ok(())
    })
}

/// # Safety
/// `draws` must be a handle from this library and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gv_draws_write(draws: *const GvDraws, dir: *const c_char) -> GvStatus {
    guard(|| {
        let d = handle(draws, "draws")?;
        let dir = c_str(dir, "dir")?;
        d.0.write_dir(Path::new(dir))?;
        Ok(())
    })
}

/// # Safety
/// `draws` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gv_draws_len(draws: *const GvDraws) -> usize {
    draws.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `draws` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gv_draws_dim(draws: *const GvDraws) -> usize {
    draws.as_ref().map_or(0, |d| d.0.dim())
}

/// # Safety
/// `draws` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn gv_draws_periods(draws: *const GvDraws) -> usize {
    draws.as_ref().map_or(0, |d| d.0.periods())
}

/// Copies the log-variance path of draw `index` into `buf`, which holds
/// `len >= periods` values.
///
/// # Safety
/// `draws` must be a handle from this library; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gv_draws_h(draws: *const GvDraws, index: usize, buf: *mut f64, len: usize) -> GvStatus {
    guard(|| {
        let d = handle(draws, "draws")?;
        copy_row(&d.0.h, index, buf, len)
    })
}

/// Copies `mu_t` of draw `index` into `buf`.
///
/// # Safety
/// `draws` must be a handle from this library; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gv_draws_mu(draws: *const GvDraws, index: usize, buf: *mut f64, len: usize) -> GvStatus {
    guard(|| {
        let d = handle(draws, "draws")?;
        copy_row(&d.0.mu, index, buf, len)
    })
}

/// Copies `beta = vec((alpha, B)')` of draw `index` into `buf`, which holds
/// `len >= dim * (dim + 1)` values.
///
/// # Safety
/// `draws` must be a handle from this library; `buf` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gv_draws_beta(draws: *const GvDraws, index: usize, buf: *mut f64, len: usize) -> GvStatus {
    guard(|| {
        let d = handle(draws, "draws")?;
        copy_row(&d.0.beta, index, buf, len)
    })
}

unsafe fn copy_row(
    m: &ginivar::sampler::DrawMatrix,
    index: usize,
    buf: *mut f64,
    len: usize,
) -> Result<(), Fail> {
    if index >= m.rows() {
        return Err(Fail::Arg(format!("draw index {index} out of range ({} draws)", m.rows())));
    }
    let row = m.row(index);
    if len < row.len() {
        return Err(Fail::Arg(format!("buffer holds {len} values, {} needed", row.len())));
    }
    if buf.is_null() {
        return Err(Fail::Arg("buf is null".into()));
    }
    ptr::copy_nonoverlapping(row.as_ptr(), buf, row.len());
    Ok(())
}

/// # Safety
/// `draws` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gv_draws_free(draws: *mut GvDraws) {
    if !draws.is_null() {
        drop(Box::from_raw(draws));
    }
}

/// Pointwise posterior IRF quantiles to a shock in `shock_variable`.
///
/// `shutdown` is null or a comma-separated list of variables whose
/// responses are switched off.
///
/// # Safety
/// `draws` must be a handle from this library, strings NUL-terminated,
/// `quantiles` must hold `n_quantiles` values and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gv_irf_bands(
    draws: *const GvDraws,
    shock_variable: *const c_char,
    horizon: usize,
    scale: f64,
    quantiles: *const f64,
    n_quantiles: usize,
    shutdown: *const c_char,
    out: *mut *mut GvBands,
) -> GvStatus {
    guard(|| {
        let d = handle(draws, "draws")?;
        let shock = c_str(shock_variable, "shock_variable")?;
        let q = slice(quantiles, n_quantiles, "quantiles")?;
        let slot = out_ref(out, "out")?;
        let off: Option<Vec<String>> = if shutdown.is_null() {
            None
        } else {
            Some(
                c_str(shutdown, "shutdown")?
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect(),
            )
        };
        let spec = IrfSpec {
            shock_variable: shock.to_string(),
            horizon,
            scale,
            quantiles: q.to_vec(),
        };
        let bands = posterior_irf_bands(&d.0, &spec, off.as_deref())?;
        *slot = boxed(GvBands(bands));
        Ok(())
    })
}

/// Band value for variable `var`, horizon `h` and quantile `q`.
///
/// # Safety
/// `bands` must be a handle from this library and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gv_bands_value(
    bands: *const GvBands,
    var: usize,
    h: usize,
    q: usize,
    out: *mut f64,
) -> GvStatus {
    guard(|| {
        let b = &handle(bands, "bands")?.0;
        let slot = out_ref(out, "out")?;
        if var >= b.variables.len() || h > b.spec.horizon || q >= b.spec.quantiles.len() {
            return Err(Fail::Arg(format!("index ({var}, {h}, {q}) out of range")));
        }
        *slot = b.value(var, h, q);
        Ok(())
    })
}

/// Tidy CSV of the bands. Release the string with [`gv_string_free`].
///
/// # Safety
/// `bands` must be a handle from this library and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gv_bands_csv(bands: *const GvBands, out: *mut *mut c_char) -> GvStatus {
    guard(|| {
        let b = &handle(bands, "bands")?.0;
        let slot = out_ref(out, "out")?;
        *slot = CString::new(b.to_csv())
            .map_err(|_| Fail::Arg("csv contains NUL".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `bands` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gv_bands_free(bands: *mut GvBands) {
    if !bands.is_null() {
        drop(Box::from_raw(bands));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
