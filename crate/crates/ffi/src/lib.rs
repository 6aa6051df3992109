//! C interface to normprobe.
//!
//! Objects cross the boundary as opaque handles created by `np_*_load`,
//! `np_align` or `np_train` and released with the matching `np_*_free`.
//! Every fallible call returns an [`NpStatus`]; on failure the message is
//! available from [`np_last_error`] on the same thread until the next call.
//! Matrices are passed as row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nalgebra::DMatrix;
use normprobe::clustering::normalized_entropy;
use normprobe::data::{
    align, load_embeddings, load_norms, AlignedData, CasePolicy, EmbeddingFormat, EmbeddingSpace, NormDataset,
    NormPaths,
};
use normprobe::evaluation::{loocv, spearman, LoocvOptions};
use normprobe::mapping::{train, Method, Model, TrainConfig};
use normprobe::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    /// Well-formed input with nothing to work on, such as no overlap.
    Degenerate = 5,
    /// Training diverged or produced non-finite values.
    Training = 6,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 7,
    /// An internal panic was caught at the boundary.
    Panic = 8,
}

/// Mapping method for [`NpTrainOptions`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpMethod {
    Linear = 0,
    Mlp = 1,
}

/// Training settings. Obtain defaults from [`np_train_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NpTrainOptions {
    pub method: NpMethod,
    pub learning_rate: f64,
    pub epochs: usize,
    pub adagrad_epsilon: f64,
    /// Zero trains on the full batch.
    pub batch_size: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub hidden: usize,
    pub tolerance: f64,
    pub patience: usize,
    pub standardize_inputs: bool,
    pub normalize_targets: bool,
}

/// Loaded embedding space.
pub struct NpSpace(EmbeddingSpace);

/// Loaded norm dataset.
pub struct NpNorms(NormDataset);

/// Embedding rows paired with norm rows.
pub struct NpAligned(AlignedData);

/// Trained mapping.
pub struct NpModel(Model);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let mut bytes = message.into();
    bytes.retain(|b| *b != 0);
    let text = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> NpStatus {
    match err {
        Error::Io { .. } => NpStatus::Io,
        Error::Parse { .. } | Error::DuplicateWord { .. } | Error::Model(_) | Error::Json(_) => NpStatus::Parse,
        Error::Shape { .. } | Error::InvalidArgument(_) => NpStatus::InvalidArgument,
        Error::Divergence { .. } | Error::NonFiniteGradient { .. } => NpStatus::Training,
        Error::Degenerate(_) => NpStatus::Degenerate,
    }
}

enum Failure {
    Status(NpStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null() -> Failure {
    Failure::Status(NpStatus::NullPointer, "required pointer is null".into())
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure::Status(NpStatus::InvalidArgument, message.into())
}

/// Runs `f`, records any failure and converts it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NpStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            NpStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null());
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid("path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn optional_path(p: *const c_char) -> Result<Option<PathBuf>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        path_arg(p).map(Some)
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

/// Writes `m` row-major into `out`, or reports the needed length.
unsafe fn write_matrix(m: &DMatrix<f64>, out: *mut f64, out_len: usize, needed: *mut usize) -> Result<(), Failure> {
    let len = m.len();
    if !needed.is_null() {
        needed.write(len);
    }
    if out_len < len {
        return Err(Failure::Status(
            NpStatus::BufferTooSmall,
            format!("output buffer holds {out_len} values, {len} needed"),
        ));
    }
    if len == 0 {
        return Ok(());
    }
    if out.is_null() {
        return Err(null());
    }
    let dst = std::slice::from_raw_parts_mut(out, len);
    for (k, v) in dst.iter_mut().enumerate() {
        *v = m[(k / m.ncols(), k % m.ncols())];
    }
    Ok(())
}

fn train_config(o: &NpTrainOptions) -> TrainConfig {
    TrainConfig {
        learning_rate: o.learning_rate,
        epochs: o.epochs,
        adagrad_epsilon: o.adagrad_epsilon,
        batch: if o.batch_size == 0 {
            normprobe::mapping::BatchMode::Full
        } else {
            normprobe::mapping::BatchMode::MiniBatch(o.batch_size)
        },
        seed: o.seed,
        init_scale: o.init_scale,
        hidden: o.hidden,
        tolerance: o.tolerance,
        patience: o.patience,
    }
}

fn method(m: NpMethod) -> Method {
    match m {
        NpMethod::Linear => Method::Linear,
        NpMethod::Mlp => Method::Mlp,
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn np_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default training settings (linear method).
#[no_mangle]
pub extern "C" fn np_train_options_default() -> NpTrainOptions {
    let d = TrainConfig::default();
    NpTrainOptions {
        method: NpMethod::Linear,
        learning_rate: d.learning_rate,
        epochs: d.epochs,
        adagrad_epsilon: d.adagrad_epsilon,
        batch_size: 0,
        seed: d.seed,
        init_scale: d.init_scale,
        hidden: d.hidden,
        tolerance: d.tolerance,
        patience: d.patience,
        standardize_inputs: false,
        normalize_targets: false,
    }
}

/// Loads an embedding file, detecting whether it has a header line.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn np_space_load(path: *const c_char, out: *mut *mut NpSpace) -> NpStatus {
    guard(|| {
        let space = load_embeddings(&path_arg(path)?, EmbeddingFormat::Auto)?;
        put(out, Box::into_raw(Box::new(NpSpace(space))))
    })
}

/// # Safety
/// `space` must be null or a handle from [`np_space_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn np_space_free(space: *mut NpSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Vocabulary size and dimension.
///
/// # Safety
/// `space` must be a live handle; `len` and `dim` writable.
#[no_mangle]
pub unsafe extern "C" fn np_space_shape(space: *const NpSpace, len: *mut usize, dim: *mut usize) -> NpStatus {
    guard(|| {
        let s = &handle(space)?.0;
        put(len, s.len())?;
        put(dim, s.dim())
    })
}

/// Loads a norm table with optional domain and gold-cluster side files
/// (pass null to omit them).
///
/// # Safety
/// Paths must be null or nul-terminated strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn np_norms_load(
    norms: *const c_char,
    domains: *const c_char,
    clusters: *const c_char,
    out: *mut *mut NpNorms,
) -> NpStatus {
    guard(|| {
        let paths = NormPaths {
            norms: path_arg(norms)?,
            domains: optional_path(domains)?,
            clusters: optional_path(clusters)?,
        };
        let data = load_norms(&paths)?;
        put(out, Box::into_raw(Box::new(NpNorms(data))))
    })
}

/// # Safety
/// `norms` must be null or a handle from [`np_norms_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn np_norms_free(norms: *mut NpNorms) {
    if !norms.is_null() {
        drop(Box::from_raw(norms));
    }
}

/// Pairs norm words with their embeddings. Words without an embedding are
/// dropped; no overlap at all yields [`NpStatus::Degenerate`].
///
/// # Safety
/// `space` and `norms` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn np_align(
    space: *const NpSpace,
    norms: *const NpNorms,
    lowercase: bool,
    out: *mut *mut NpAligned,
) -> NpStatus {
    guard(|| {
        let policy = if lowercase {
            CasePolicy::Lowercase
        } else {
            CasePolicy::Sensitive
        };
        let data = align(&handle(space)?.0, &handle(norms)?.0, policy)?;
        put(out, Box::into_raw(Box::new(NpAligned(data))))
    })
}

/// Aligned data from row-major `rows × input_dim` inputs and
/// `rows × output_dim` targets.
///
/// # Safety
/// Buffers must hold the stated number of values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn np_aligned_from_matrices(
    inputs: *const f64,
    targets: *const f64,
    rows: usize,
    input_dim: usize,
    output_dim: usize,
    out: *mut *mut NpAligned,
) -> NpStatus {
    guard(|| {
        let x = slice(inputs, rows * input_dim)?;
        let b = slice(targets, rows * output_dim)?;
        let data = AlignedData::from_matrices(
            DMatrix::from_row_slice(rows, input_dim, x),
            DMatrix::from_row_slice(rows, output_dim, b),
        )?;
        put(out, Box::into_raw(Box::new(NpAligned(data))))
    })
}

/// # Safety
/// `data` must be null or an aligned handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn np_aligned_free(data: *mut NpAligned) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Row count, embedding dimension and norm attribute count.
///
/// # Safety
/// `data` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn np_aligned_shape(
    data: *const NpAligned,
    rows: *mut usize,
    input_dim: *mut usize,
    output_dim: *mut usize,
) -> NpStatus {
    guard(|| {
        let d = &handle(data)?.0;
        put(rows, d.len())?;
        put(input_dim, d.input_dim())?;
        put(output_dim, d.output_dim())
    })
}

/// Spearman rank correlation. `defined` is set false (and `rho` to NaN)
/// when either sequence is constant.
///
/// # Safety
/// `x` and `y` must hold `len` values; `rho` and `defined` writable.
#[no_mangle]
pub unsafe extern "C" fn np_spearman(
    x: *const f64,
    y: *const f64,
    len: usize,
    rho: *mut f64,
    defined: *mut bool,
) -> NpStatus {
    guard(|| {
        let r = spearman(slice(x, len)?, slice(y, len)?)?;
        put(rho, r.unwrap_or(f64::NAN))?;
        put(defined, r.is_some())
    })
}

/// Normalized entropy of the members of one gold category over the
/// cluster `labels` of all rows.
///
/// # Safety
/// `members` must hold `n_members` indices and `labels` `n_labels`.
#[no_mangle]
pub unsafe extern "C" fn np_normalized_entropy(
    members: *const usize,
    n_members: usize,
    labels: *const usize,
    n_labels: usize,
    out: *mut f64,
) -> NpStatus {
    guard(|| {
        let h = normalized_entropy(slice(members, n_members)?, slice(labels, n_labels)?)?;
        put(out, h)
    })
}

/// Leave-one-out estimates of every norm row, written row-major into
/// `out` (`rows × output_dim` values). Rows of failed folds are NaN.
/// `needed` (may be null) receives the required length.
///
/// # Safety
/// `data` and `options` must be valid; `out` must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn np_loocv(
    data: *const NpAligned,
    options: *const NpTrainOptions,
    out: *mut f64,
    out_len: usize,
    needed: *mut usize,
) -> NpStatus {
    guard(|| {
        let d = &handle(data)?.0;
        let o = handle(options)?;
        let opts = LoocvOptions {
            method: method(o.method),
            train: train_config(o),
            standardize_inputs: o.standardize_inputs,
            normalize_targets: o.normalize_targets,
            parallel: false,
        };
        let required = d.len() * d.output_dim();
        if !needed.is_null() {
            needed.write(required);
        }
        if out_len < required {
            return Err(Failure::Status(
                NpStatus::BufferTooSmall,
                format!("output buffer holds {out_len} values, {required} needed"),
            ));
        }
        let result = loocv(d, &opts)?;
        write_matrix(&result.estimates, out, out_len, needed)
    })
}

/// Trains a mapping on all rows of `data`. Input standardization and
/// target normalization are LOOCV options and are ignored here.
///
/// # Safety
/// `data` and `options` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn np_train(
    data: *const NpAligned,
    options: *const NpTrainOptions,
    out: *mut *mut NpModel,
) -> NpStatus {
    guard(|| {
        let d = &handle(data)?.0;
        let o = handle(options)?;
        let trained = train(method(o.method), &d.inputs, &d.targets, &train_config(o))?;
        put(out, Box::into_raw(Box::new(NpModel(trained.model))))
    })
}

/// # Safety
/// `model` must be null or a handle from [`np_train`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn np_model_free(model: *mut NpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Input and output dimensions of a model.
///
/// # Safety
/// `model` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn np_model_shape(
    model: *const NpModel,
    input_dim: *mut usize,
    output_dim: *mut usize,
) -> NpStatus {
    guard(|| {
        let m = &handle(model)?.0;
        put(input_dim, m.input_dim())?;
        put(output_dim, m.output_dim())
    })
}

/// Applies a model to `rows × input_dim` row-major inputs, writing
/// `rows × output_dim` values to `out`.
///
/// # Safety
/// `inputs` must hold `rows * cols` values and `out` `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn np_model_predict(
    model: *const NpModel,
    inputs: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
    out_len: usize,
    needed: *mut usize,
) -> NpStatus {
    guard(|| {
        let m = &handle(model)?.0;
        let x = DMatrix::from_row_slice(rows, cols, slice(inputs, rows * cols)?);
        let pred = m.predict(&x)?;
        write_matrix(&pred, out, out_len, needed)
    })
}
