//! Python bindings. Points are `(x, y, z)` tuples on the lower hemisphere,
//! angles are radians unless a name says otherwise.

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use hemipwi::return_plot::{ReturnPlotParams, Seeding};
use hemipwi::sphere::{self, DiskCoord, SpherePoint};
use hemipwi::{CutParam, Error, SingleAxisProtocol};

create_exception!(hemipwi_py, BoundaryPointError, PyValueError, "Point landed exactly on the equator.");

type Point = (f64, f64, f64);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::BoundaryPoint(_) => BoundaryPointError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn point(p: Point) -> SpherePoint {
    SpherePoint::new(p.0, p.1, p.2)
}

fn tuple(p: SpherePoint) -> Point {
    (p.x, p.y, p.z)
}

#[pyclass(name = "Protocol", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyProtocol(hemipwi::Protocol);

#[pymethods]
impl PyProtocol {
    #[new]
    fn new(alpha: f64, beta: f64) -> PyResult<Self> {
        hemipwi::Protocol::new(alpha, beta).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_degrees(alpha: f64, beta: f64) -> PyResult<Self> {
        hemipwi::Protocol::from_degrees(alpha, beta).map(Self).map_err(to_py)
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.0.alpha()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    fn __repr__(&self) -> String {
        format!(
            "Protocol(alpha={:.6}deg, beta={:.6}deg)",
            self.0.alpha().to_degrees(),
            self.0.beta().to_degrees()
        )
    }
}

/// One application of the map.
#[pyclass(name = "Step", frozen, get_all)]
struct PyStep {
    intermediate: Point,
    image: Point,
    /// 1 to 4.
    atom: u8,
}

#[pyclass(name = "PwiMap", frozen)]
struct PyPwiMap(hemipwi::PwiMap);

#[pymethods]
impl PyPwiMap {
    #[new]
    fn new(protocol: PyProtocol) -> Self {
        Self(hemipwi::PwiMap::new(protocol.0))
    }

    #[getter]
    fn protocol(&self) -> PyProtocol {
        PyProtocol(self.0.protocol())
    }

    fn has_d1(&self) -> bool {
        self.0.has_d1()
    }

    fn forward(&self, p: Point) -> PyResult<PyStep> {
        let t = self.0.forward(point(p)).map_err(to_py)?;
        Ok(PyStep {
            intermediate: tuple(t.intermediate),
            image: tuple(t.image),
            atom: t.atom as u8 + 1,
        })
    }

    /// Image after `n` steps.
    fn iterate(&self, p: Point, n: u64) -> PyResult<Point> {
        let mut q = point(p);
        for _ in 0..n {
            q = self.0.forward(q).map_err(to_py)?.image;
        }
        Ok(tuple(q))
    }

    fn inverse(&self, p: Point) -> PyResult<Point> {
        self.0.inverse(point(p)).map(tuple).map_err(to_py)
    }

    /// Geodesic distances `(d1, d2)` to the two cutting lines.
    fn cutline_distances(&self, p: Point) -> PyResult<(f64, f64)> {
        self.0.cutline_distances(point(p)).map_err(to_py)
    }

    /// Seed at `delta` beside the line point with parameter `theta` in [0, 4 pi).
    fn param_point(&self, theta: f64, delta: f64) -> PyResult<Point> {
        let t = CutParam::new(theta).map_err(to_py)?;
        self.0.param_point(t, delta).map(tuple).map_err(to_py)
    }

    /// Line return counts `(n1, n2)` over `iterations + 1` visits.
    fn accumulate(&self, py: Python<'_>, p: Point, eps: f64, iterations: u64) -> PyResult<(u64, u64)> {
        let p = point(p);
        py.detach(|| hemipwi::accumulate(&self.0, p, eps, iterations)).map_err(to_py)
    }
}

#[pyfunction]
fn lambert_project(p: Point) -> PyResult<(f64, f64)> {
    sphere::lambert_project(point(p)).map(|c| (c.u, c.v)).map_err(to_py)
}

#[pyfunction]
fn lambert_inverse(u: f64, v: f64) -> PyResult<Point> {
    sphere::lambert_inverse(DiskCoord::new(u, v)).map(tuple).map_err(to_py)
}

#[pyclass(name = "DensityGrid", frozen)]
struct PyDensityGrid(hemipwi::DensityGrid);

#[pymethods]
impl PyDensityGrid {
    #[staticmethod]
    #[pyo3(signature = (protocol, eps=1e-3, iterations=20_000, resolution=256, workers=0))]
    fn compute(
        py: Python<'_>,
        protocol: PyProtocol,
        eps: f64,
        iterations: u64,
        resolution: usize,
        workers: usize,
    ) -> PyResult<Self> {
        py.detach(|| hemipwi::DensityGrid::compute(protocol.0, eps, iterations, resolution, workers))
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn resolution(&self) -> usize {
        self.0.resolution
    }

    #[getter]
    fn n1(&self) -> Vec<u32> {
        self.0.n1.clone()
    }

    #[getter]
    fn n2(&self) -> Vec<u32> {
        self.0.n2.clone()
    }

    #[getter]
    fn valid(&self) -> Vec<bool> {
        self.0.valid.clone()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn hue(&self, i: usize) -> PyResult<Option<f64>> {
        self.check(i)?;
        Ok(self.0.hue_at(i))
    }

    fn lightness(&self, i: usize) -> PyResult<f64> {
        self.check(i)?;
        Ok(self.0.lightness_at(i))
    }

    fn covered_fraction(&self) -> f64 {
        self.0.covered_fraction()
    }

    #[pyo3(signature = (min_total=20))]
    fn color_stats<'py>(&self, py: Python<'py>, min_total: u64) -> PyResult<Bound<'py, PyDict>> {
        let check = self.0.ergodicity_check(min_total);
        let s = check.stats;
        let d = PyDict::new(py);
        d.set_item("defined_pixels", s.defined_pixels)?;
        d.set_item("hue_mean", s.hue_mean)?;
        d.set_item("hue_std", s.hue_std)?;
        d.set_item("lightness_mean", s.lightness_mean)?;
        d.set_item("lightness_cv", s.lightness_cv)?;
        d.set_item("non_ergodic", check.non_ergodic)?;
        Ok(d)
    }

    /// Binary P6 pixmap.
    fn render_ppm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.render().to_ppm())
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }
}

impl PyDensityGrid {
    fn check(&self, i: usize) -> PyResult<()> {
        if i < self.0.len() {
            Ok(())
        } else {
            Err(PyIndexError::new_err(format!("pixel {i} out of range")))
        }
    }
}

#[pyclass(name = "ReturnHistogram", frozen)]
struct PyReturnHistogram(hemipwi::ReturnHistogram);

#[pymethods]
impl PyReturnHistogram {
    #[staticmethod]
    #[pyo3(signature = (protocol, eps=1e-3, delta=1e-6, bins=1000, seeds_per_bin=10, iterations=20_000, jitter_seed=None, workers=0))]
    #[allow(clippy::too_many_arguments)]
    fn build(
        py: Python<'_>,
        protocol: PyProtocol,
        eps: f64,
        delta: f64,
        bins: usize,
        seeds_per_bin: usize,
        iterations: u64,
        jitter_seed: Option<u64>,
        workers: usize,
    ) -> PyResult<Self> {
        let params = ReturnPlotParams {
            protocol: protocol.0,
            eps,
            delta,
            bins,
            seeds_per_bin,
            iterations,
            seeding: jitter_seed.map_or(Seeding::Lattice, |seed| Seeding::Jittered { seed }),
        };
        py.detach(|| hemipwi::ReturnHistogram::build(params, workers))
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn bins(&self) -> usize {
        self.0.bins()
    }

    /// Row-major `bins * bins` counts, row = source bin.
    #[getter]
    fn counts(&self) -> Vec<u64> {
        self.0.counts.clone()
    }

    #[getter]
    fn substituted(&self) -> u64 {
        self.0.substituted
    }

    fn get(&self, i: usize, j: usize) -> PyResult<u64> {
        let t = self.0.bins();
        if i >= t || j >= t {
            return Err(PyIndexError::new_err(format!("cell ({i}, {j}) out of range")));
        }
        Ok(self.0.get(i, j))
    }

    fn empty_fraction(&self) -> f64 {
        self.0.empty_fraction()
    }

    fn row_density(&self, i: usize) -> PyResult<f64> {
        self.0.row_density(i).map_err(to_py)
    }

    fn render_ppm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.log_render().to_ppm())
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }
}

#[pyfunction]
#[pyo3(signature = (protocol, eps=1e-3, delta=1e-6, iterations=20_000, seeds=2000, workers=0))]
fn phi_density(
    py: Python<'_>,
    protocol: PyProtocol,
    eps: f64,
    delta: f64,
    iterations: u64,
    seeds: usize,
    workers: usize,
) -> PyResult<f64> {
    py.detach(|| hemipwi::phi_density(protocol.0, eps, delta, iterations, seeds, workers))
        .map(|e| e.phi)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (protocol, eps=1e-3, iterations=20_000, resolution=1024, workers=0))]
fn phi_direct(
    py: Python<'_>,
    protocol: PyProtocol,
    eps: f64,
    iterations: u64,
    resolution: usize,
    workers: usize,
) -> PyResult<f64> {
    py.detach(|| hemipwi::phi_direct(protocol.0, eps, iterations, resolution, workers))
        .map(|e| e.phi)
        .map_err(to_py)
}

#[pyfunction]
fn overlap_area(protocol: PyProtocol, eps: f64) -> f64 {
    hemipwi::overlap_area(protocol.0, eps)
}

#[pyfunction]
fn arc_length_l(z: f64) -> PyResult<f64> {
    hemipwi::arc_length_l(z).map_err(to_py)
}

#[pyfunction]
fn analytic_rho(z: f64, eps: f64) -> PyResult<f64> {
    hemipwi::analytic_rho(z, eps).map_err(to_py)
}

/// Limiting coverage of `(phi, 0)`: pass `phi` for an irrational angle or
/// `rational=(p, q)` for `pi * p / q`.
#[pyfunction]
#[pyo3(signature = (phi=None, rational=None))]
fn analytic_phi(phi: Option<f64>, rational: Option<(u64, u64)>) -> PyResult<f64> {
    let single = match (phi, rational) {
        (Some(phi), None) => SingleAxisProtocol::Irrational { phi },
        (None, Some((p, q))) => SingleAxisProtocol::rational(p, q).map_err(to_py)?,
        _ => return Err(PyValueError::new_err("give exactly one of phi, rational")),
    };
    Ok(hemipwi::analytic_phi(single))
}

#[pymodule]
fn hemipwi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("BoundaryPointError", m.py().get_type::<BoundaryPointError>())?;
    m.add_class::<PyProtocol>()?;
    m.add_class::<PyStep>()?;
    m.add_class::<PyPwiMap>()?;
    m.add_class::<PyDensityGrid>()?;
    m.add_class::<PyReturnHistogram>()?;
    m.add_function(wrap_pyfunction!(lambert_project, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(phi_density, m)?)?;
    m.add_function(wrap_pyfunction!(phi_direct, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_area, m)?)?;
    m.add_function(wrap_pyfunction!(arc_length_l, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_rho, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_phi, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_from_python() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "hemipwi_py").unwrap();
            hemipwi_py(&m).unwrap();
            let globals = PyDict::new(py);
            globals.set_item("h", m).unwrap();
            py.run(
                cr#"
import math
prot = h.Protocol.from_degrees(57.0, 32.75)
assert abs(prot.alpha - math.radians(57.0)) < 1e-15
f = h.PwiMap(prot)
p = (0.3, -0.8, 0.52)
n = math.sqrt(sum(c * c for c in p))
p = tuple(c / n for c in p)
s = f.forward(p)
assert s.atom in (1, 2, 3, 4)
q = f.inverse(s.image)
assert max(abs(a - b) for a, b in zip(p, q)) < 1e-12
try:
    h.PwiMap(h.Protocol(0.0, 0.0)).forward((1.0, 0.0, 0.0))
    raise AssertionError("no error")
except h.BoundaryPointError:
    pass
try:
    h.Protocol.from_degrees(180.0, 0.0)
    raise AssertionError("no error")
except ValueError:
    pass
assert h.analytic_phi(phi=1.0) == 1.0 and h.analytic_phi(rational=(1, 2)) == 0.0
"#,
                Some(&globals),
                None,
            )
            .unwrap();
        });
    }
}
