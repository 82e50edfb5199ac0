//! C ABI over `ettscope`.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns an
//! [`EttStatus`]; on failure the message is available from
//! [`ettscope_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use ettscope::corpus::{self, StopWords, TokenizedPost};
use ettscope::detect::{self, AnomalousReport, DetectConfig, RmConfig};
use ettscope::groups;
use ettscope::linalg::CsrMatrix;
use ettscope::narrowness;
use ettscope::netgraph::{self, Category, MentionGraph};
use ettscope::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EttStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidParameter = 3,
    Io = 4,
    Parse = 5,
    EmptyPopulation = 6,
    NoContent = 7,
    SvdNonConvergence = 8,
    Integrity = 9,
    EmptyNeighborhood = 10,
    NotFound = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EttCategory {
    Regular = 0,
    Ett = 1,
    Anomalous = 2,
}

impl From<EttCategory> for Category {
    fn from(c: EttCategory) -> Self {
        match c {
            EttCategory::Regular => Category::Regular,
            EttCategory::Ett => Category::Ett,
            EttCategory::Anomalous => Category::Anomalous,
        }
    }
}

/// Detection parameters; `rm_k == 0` selects the per-user default rank.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EttDetectParams {
    pub delta: f64,
    pub lambda: f64,
    pub d: f64,
    pub matrix_budget: u64,
    pub rm_k: usize,
    pub rm_oversample: usize,
    pub rm_power: usize,
    pub seed: u64,
}

/// Group coreness and interaction metrics; ratios are NaN when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EttGroupMetrics {
    pub has_group: bool,
    pub group_size: usize,
    pub k1: u32,
    pub k2: u32,
    pub k3: u32,
    pub cnr2: f64,
    pub dr2: f64,
    pub cnr3: f64,
    pub dr3: f64,
}

/// Tokenized posts.
pub struct EttPosts {
    posts: Vec<TokenizedPost>,
    malformed: usize,
}

/// Detection result with NUL-terminated copies of the anomalous ids.
pub struct EttReport {
    report: AnomalousReport,
    anomalous: Vec<CString>,
}

/// Labeled mention graph whose node `i` is the `i`-th node passed in.
pub struct EttGraph {
    graph: MentionGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: EttStatus, msg: impl Into<String>) -> EttStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> EttStatus {
    let status = match &e {
        Error::Io(_) => EttStatus::Io,
        Error::InvalidParameter(_) | Error::Config(_) => EttStatus::InvalidParameter,
        Error::EmptyPopulation => EttStatus::EmptyPopulation,
        Error::NoContent(_) => EttStatus::NoContent,
        Error::SvdNonConvergence => EttStatus::SvdNonConvergence,
        Error::Integrity(_) => EttStatus::Integrity,
        Error::EmptyNeighborhood => EttStatus::EmptyNeighborhood,
        Error::Csv(_) | Error::Json(_) => EttStatus::Parse,
    };
    fail(status, e.to_string())
}

fn guarded(f: impl FnOnce() -> EttStatus) -> EttStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(EttStatus::Panic, "internal panic"))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, EttStatus> {
    p.as_mut()
        .ok_or_else(|| fail(EttStatus::NullPointer, "null output pointer"))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], EttStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(EttStatus::NullPointer, "null input buffer"));
    }
    Ok(slice::from_raw_parts(p, len))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ettscope_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn ettscope_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn ettscope_detect_params_default() -> EttDetectParams {
    EttDetectParams {
        delta: detect::DEFAULT_DELTA,
        lambda: detect::DEFAULT_LAMBDA,
        d: narrowness::DEFAULT_ENERGY_THRESHOLD,
        matrix_budget: detect::DEFAULT_MATRIX_BUDGET,
        rm_k: 0,
        rm_oversample: narrowness::DEFAULT_OVERSAMPLE,
        rm_power: narrowness::DEFAULT_POWER_ITERS,
        seed: 0,
    }
}

/// Parse and tokenize line-delimited JSON posts with the built-in stop words.
/// Malformed lines are skipped and counted.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ettscope_posts_parse(
    data: *const u8,
    len: usize,
    out: *mut *mut EttPosts,
) -> EttStatus {
    guarded(|| {
        let out = tri!(out_ref(out));
        *out = ptr::null_mut();
        let bytes = tri!(in_slice(data, len));
        let parsed = match corpus::parse_posts(bytes) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        let posts = corpus::tokenize_all(&parsed.posts, &StopWords::english());
        *out = Box::into_raw(Box::new(EttPosts {
            posts,
            malformed: parsed.malformed,
        }));
        EttStatus::Ok
    })
}

/// # Safety
/// `posts` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ettscope_posts_len(posts: *const EttPosts) -> usize {
    posts.as_ref().map_or(0, |p| p.posts.len())
}

/// # Safety
/// `posts` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ettscope_posts_malformed(posts: *const EttPosts) -> usize {
    posts.as_ref().map_or(0, |p| p.malformed)
}

/// # Safety
/// `posts` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ettscope_posts_free(posts: *mut EttPosts) {
    if !posts.is_null() {
        drop(Box::from_raw(posts));
    }
}

/// Detect anomalous users in `[start, end)`; `params` may be null for defaults.
///
/// # Safety
/// `posts` must be a live handle, `params` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ettscope_detect(
    posts: *const EttPosts,
    start: i64,
    end: i64,
    params: *const EttDetectParams,
    out: *mut *mut EttReport,
) -> EttStatus {
    guarded(|| {
        let out = tri!(out_ref(out));
        *out = ptr::null_mut();
        let Some(posts) = posts.as_ref() else {
            return fail(EttStatus::NullPointer, "null posts handle");
        };
        let p = params
            .as_ref()
            .copied()
            .unwrap_or_else(|| ettscope_detect_params_default());
        let config = DetectConfig {
            period: (start, end),
            delta: p.delta,
            lambda: p.lambda,
            matrix_budget: p.matrix_budget,
            d: p.d,
            rm: RmConfig {
                k: (p.rm_k > 0).then_some(p.rm_k),
                oversample: p.rm_oversample,
                power_iters: p.rm_power,
            },
            seed: p.seed,
        };
        let report = match detect::detect_anomalous(&posts.posts, &config) {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        let anomalous = report
            .anomalous_users()
            .into_iter()
            .map(|u| CString::new(u).unwrap_or_default())
            .collect();
        *out = Box::into_raw(Box::new(EttReport { report, anomalous }));
        EttStatus::Ok
    })
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ettscope_report_user_count(report: *const EttReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.n_users)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ettscope_report_ett_count(report: *const EttReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.n_ett)
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ettscope_report_anomalous_count(report: *const EttReport) -> usize {
    report.as_ref().map_or(0, |r| r.anomalous.len())
}

/// The `i`-th anomalous user id in sorted order, owned by the report; null
/// when out of range.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ettscope_report_anomalous_id(
    report: *const EttReport,
    i: usize,
) -> *const c_char {
    report
        .as_ref()
        .and_then(|r| r.anomalous.get(i))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Narrowness of an ETT user.
///
/// # Safety
/// `report` must be a live handle, `user_id` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ettscope_report_narrowness(
    report: *const EttReport,
    user_id: *const c_char,
    out: *mut f64,
) -> EttStatus {
    guarded(|| {
        let out = tri!(out_ref(out));
        let (Some(report), false) = (report.as_ref(), user_id.is_null()) else {
            return fail(EttStatus::NullPointer, "null report or user id");
        };
        let Ok(id) = CStr::from_ptr(user_id).to_str() else {
            return fail(EttStatus::InvalidUtf8, "user id is not UTF-8");
        };
        match report.report.narrowness_of(id) {
            Some(v) => {
                *out = v;
                EttStatus::Ok
            }
            None => fail(EttStatus::NotFound, format!("{id} has no narrowness score")),
        }
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ettscope_report_free(report: *mut EttReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

unsafe fn build_graph(
    n_nodes: usize,
    labels: &[EttCategory],
    src: *const u32,
    dst: *const u32,
    n_edges: usize,
) -> Result<MentionGraph, EttStatus> {
    let (src, dst) = (in_slice(src, n_edges)?, in_slice(dst, n_edges)?);
    // zero-padded names keep index order
    let width = n_nodes.to_string().len();
    let name = |i: usize| format!("{i:0width$}");
    let mut edges = Vec::with_capacity(n_edges);
    for (&a, &b) in src.iter().zip(dst) {
        let (a, b) = (a as usize, b as usize);
        if a >= n_nodes || b >= n_nodes {
            return Err(fail(
                EttStatus::InvalidParameter,
                format!("edge ({a}, {b}) outside 0..{n_nodes}"),
            ));
        }
        edges.push((name(a), name(b)));
    }
    let nodes = (0..n_nodes).map(|i| {
        (
            name(i),
            labels
                .get(i)
                .copied()
                .unwrap_or(EttCategory::Regular)
                .into(),
        )
    });
    Ok(MentionGraph::from_edges(nodes, edges))
}

/// Core number of every node of an undirected graph on nodes `0..n_nodes`
/// given as parallel edge arrays; `out` receives `n_nodes` values.
///
/// # Safety
/// `src` and `dst` must hold `n_edges` values; `out` must hold `n_nodes`.
#[no_mangle]
pub unsafe extern "C" fn ettscope_core_numbers(
    n_nodes: usize,
    src: *const u32,
    dst: *const u32,
    n_edges: usize,
    out: *mut u32,
) -> EttStatus {
    guarded(|| {
        if n_nodes > 0 && out.is_null() {
            return fail(EttStatus::NullPointer, "null output buffer");
        }
        let g = tri!(build_graph(n_nodes, &[], src, dst, n_edges));
        let cm = netgraph::core_decomposition(&g);
        let out = slice::from_raw_parts_mut(out, n_nodes);
        out.copy_from_slice(&cm.values);
        EttStatus::Ok
    })
}

unsafe fn dense_matrix(data: *const f64, rows: usize, cols: usize) -> Result<CsrMatrix, EttStatus> {
    let Some(len) = rows.checked_mul(cols) else {
        return Err(fail(EttStatus::InvalidParameter, "matrix size overflows"));
    };
    let values = in_slice(data, len)?;
    let rows_vec = values
        .chunks(cols.max(1))
        .take(rows)
        .map(|r| {
            r.iter()
                .copied()
                .enumerate()
                .filter(|&(_, v)| v != 0.0)
                .collect()
        })
        .collect();
    CsrMatrix::from_rows(cols, rows_vec).map_err(from_error)
}

/// Exact narrowness `1 - K/rows` of a row-major matrix at energy threshold `d`.
///
/// # Safety
/// `data` must hold `rows * cols` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ettscope_exact_narrowness(
    data: *const f64,
    rows: usize,
    cols: usize,
    d: f64,
    out: *mut f64,
) -> EttStatus {
    guarded(|| {
        let out = tri!(out_ref(out));
        let m = tri!(dense_matrix(data, rows, cols));
        match narrowness::exact_narrowness(&m, d) {
            Ok(v) => {
                *out = v;
                EttStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Randomized narrowness of a row-major matrix; `k == 0` selects the default rank.
///
/// # Safety
/// `data` must hold `rows * cols` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ettscope_rm_narrowness(
    data: *const f64,
    rows: usize,
    cols: usize,
    k: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
    out: *mut f64,
) -> EttStatus {
    guarded(|| {
        let out = tri!(out_ref(out));
        let m = tri!(dense_matrix(data, rows, cols));
        match narrowness::rm_narrowness(&m, (k > 0).then_some(k), oversample, power_iters, seed) {
            Ok(v) => {
                *out = v;
                EttStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Labeled graph on nodes `0..n_nodes`; `labels` holds `n_nodes` entries.
///
/// # Safety
/// `labels` must hold `n_nodes` values, `src`/`dst` `n_edges` values, and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ettscope_graph_new(
    n_nodes: usize,
    labels: *const EttCategory,
    src: *const u32,
    dst: *const u32,
    n_edges: usize,
    out: *mut *mut EttGraph,
) -> EttStatus {
    guarded(|| {
        let out = tri!(out_ref(out));
        *out = ptr::null_mut();
        let labels = tri!(in_slice(labels, n_nodes));
        let graph = tri!(build_graph(n_nodes, labels, src, dst, n_edges));
        *out = Box::into_raw(Box::new(EttGraph { graph }));
        EttStatus::Ok
    })
}

/// # Safety
/// `graph` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ettscope_graph_free(graph: *mut EttGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Anomalous group of a labeled graph with its Type-II and Type-III metrics.
/// `has_group` is false when the anomalous users share no edge.
///
/// # Safety
/// `graph` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ettscope_group_metrics(
    graph: *const EttGraph,
    out: *mut EttGroupMetrics,
) -> EttStatus {
    guarded(|| {
        let out = tri!(out_ref(out));
        let Some(g) = graph.as_ref() else {
            return fail(EttStatus::NullPointer, "null graph handle");
        };
        let analysis = match groups::analyze(&g.graph) {
            Ok(a) => a,
            Err(e) => return from_error(e),
        };
        *out = match analysis {
            None => EttGroupMetrics {
                has_group: false,
                group_size: 0,
                k1: 0,
                k2: 0,
                k3: 0,
                cnr2: f64::NAN,
                dr2: f64::NAN,
                cnr3: f64::NAN,
                dr3: f64::NAN,
            },
            Some(a) => EttGroupMetrics {
                has_group: true,
                group_size: a.group.members.len(),
                k1: a.group.k1,
                k2: a.type2.k,
                k3: a.type3.k,
                cnr2: a.type2.r.unwrap_or(f64::NAN),
                dr2: a.type2.beta.unwrap_or(f64::NAN),
                cnr3: a.type3.r.unwrap_or(f64::NAN),
                dr3: a.type3.beta.unwrap_or(f64::NAN),
            },
        };
        EttStatus::Ok
    })
}
