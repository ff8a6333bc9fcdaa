#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "schurdirac/block_operator.hpp"
#include "schurdirac/dirac_coulomb.hpp"
#include "schurdirac/error.hpp"
#include "schurdirac/schur_solver.hpp"

namespace py = pybind11;
using namespace schurdirac;

namespace {

C1Policy policy_from(std::optional<double> c1) {
  return c1 ? C1Policy::assert_bound(*c1) : C1Policy::compute();
}

GridScheme scheme_from(const std::string& name) {
  if (name == "uniform") return GridScheme::uniform;
  if (name == "logarithmic") return GridScheme::logarithmic;
  throw Error(ErrorCode::ValidationError, "scheme must be 'uniform' or 'logarithmic'");
}

py::dict grid_dict(const GridSpec& g) {
  py::dict d;
  d["grid_N"] = g.n;
  d["grid_scheme"] = std::string(to_string(g.scheme));
  d["r_min"] = g.r_min;
  d["r_max"] = g.r_max;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Schur-complement elimination for symmetric indefinite block operators";
  py::register_exception<Error>(m, "SchurDiracError", PyExc_RuntimeError);

  py::class_<BlockOperator>(m, "BlockOperator")
      .def_property_readonly("N", &BlockOperator::half_dim)
      .def_property_readonly("c1", &BlockOperator::c1)
      .def_property_readonly("P", &BlockOperator::p)
      .def_property_readonly("Q", &BlockOperator::q)
      .def_property_readonly("T", &BlockOperator::t)
      .def_property_readonly("S", &BlockOperator::s)
      .def("assembled", &BlockOperator::assembled)
      .def("__repr__", [](const BlockOperator& op) {
        return "<BlockOperator N=" + std::to_string(op.half_dim()) + " c1=" + std::to_string(op.c1()) + ">";
      });

  m.def("assemble",
        [](const DenseMatrix& p, const DenseMatrix& t, const DenseMatrix& s, std::optional<double> c1) {
          return BlockOperator::assemble(p.sparseView(), t.sparseView(), s.sparseView(), policy_from(c1));
        },
        py::arg("P"), py::arg("T"), py::arg("S"), py::arg("c1") = py::none());
  m.def("assemble_sparse",
        [](const SparseMatrix& p, const SparseMatrix& t, const SparseMatrix& s, std::optional<double> c1) {
          return BlockOperator::assemble(p, t, s, policy_from(c1));
        },
        py::arg("P"), py::arg("T"), py::arg("S"), py::arg("c1") = py::none());

  m.def("apply",
        [](const BlockOperator& op, const Vector& u, const Vector& v) {
          const StateVector out = apply(op, {u, v});
          return py::make_tuple(out.u, out.v);
        },
        py::arg("op"), py::arg("u"), py::arg("v"));
  m.def("schur_form_matrix", &schur_form_matrix, py::arg("op"), py::arg("alpha"));
  m.def("positivity_margin", &positivity_margin, py::arg("op"), py::arg("alpha"));
  m.def("find_c2", &find_c2, py::arg("op"), py::arg("tol") = 1e-8);
  m.def("inertia_c2_oracle", &inertia_c2_oracle, py::arg("op"), py::arg("dense_cap") = kDenseOracleCap);
  m.def("embedding_delta",
        [](const BlockOperator& op, double tol) {
          const EmbeddingCertificate c = embedding_delta(op, tol);
          py::dict d;
          d["delta"] = c.delta;
          d["c2"] = c.c2;
          d["min_eigenvalue"] = c.min_eigenvalue;
          d["certified"] = c.certified;
          return d;
        },
        py::arg("op"), py::arg("tol") = 1e-8);
  m.def("resolvent_difference_check",
        [](const BlockOperator& op, double alpha, double delta) {
          return resolvent_difference_check(op, alpha, delta);
        },
        py::arg("op"), py::arg("alpha"), py::arg("delta"));
  m.def("to_text", &to_text);
  m.def("from_text", [](const std::string& text) { return from_text(text); });

  m.def("solve",
        [](const BlockOperator& op, const Vector& f1, const Vector& f2) {
          const SolveReport r = solve(op, {f1, f2});
          py::dict d;
          d["u"] = r.solution.u;
          d["v"] = r.solution.v;
          d["residual_norm"] = r.residual_norm;
          d["schur_condition_estimate"] = r.schur_condition_estimate;
          d["ill_conditioned"] = r.ill_conditioned;
          return d;
        },
        py::arg("op"), py::arg("F1"), py::arg("F2"));
  m.def("symmetry_identity_check",
        [](const BlockOperator& op, const Vector& u, const Vector& v, const Vector& ut, const Vector& vt) {
          const SymmetryCheck c = symmetry_identity_check(op, {u, v}, {ut, vt});
          return py::make_tuple(c.lhs, c.rhs, c.absdiff);
        },
        py::arg("op"), py::arg("u"), py::arg("v"), py::arg("u_tilde"), py::arg("v_tilde"));
  m.def("shifted_operator", &shifted_operator, py::arg("op"), py::arg("sigma"));
  m.def("gap_eigenvalues",
        [](const BlockOperator& op, double sigma, int k, double tol) {
          GapOptions options;
          options.tol = tol;
          py::list out;
          for (const auto& p : gap_eigenvalues(op, sigma, k, options))
            out.append(py::make_tuple(p.value, p.vector.u, p.vector.v, p.residual));
          return out;
        },
        py::arg("op"), py::arg("sigma"), py::arg("k"), py::arg("tol") = 1e-8);

  m.def("build_grid",
        [](const std::string& scheme, Index n, double r_min, double r_max) {
          return build_grid(scheme_from(scheme), n, r_min, r_max).nodes;
        },
        py::arg("scheme"), py::arg("N"), py::arg("r_min") = 1e-4, py::arg("r_max") = 100.0);
  m.def("build_channel",
        [](int kappa, double nu, double gamma, const std::string& scheme, Index n, double r_min, double r_max) {
          return build_channel({kappa, nu, gamma}, build_grid(scheme_from(scheme), n, r_min, r_max));
        },
        py::arg("kappa"), py::arg("nu"), py::arg("gamma") = 0.5, py::arg("scheme") = "logarithmic",
        py::arg("N") = 2000, py::arg("r_min") = 1e-4, py::arg("r_max") = 100.0);
  m.def("sommerfeld_energy", &sommerfeld_energy, py::arg("n"), py::arg("kappa"), py::arg("nu"));
  m.def("channel_spectrum",
        [](int kappa, double nu, double gamma, const std::string& scheme, Index n, double r_min, double r_max,
           int k) {
          return channel_spectrum({kappa, nu, gamma}, build_grid(scheme_from(scheme), n, r_min, r_max), k);
        },
        py::arg("kappa"), py::arg("nu"), py::arg("gamma") = 0.5, py::arg("scheme") = "logarithmic",
        py::arg("N") = 2000, py::arg("r_min") = 1e-4, py::arg("r_max") = 100.0, py::arg("k") = 2);
  m.def("c2_consistency",
        [](int kappa, double nu, double gamma, const std::string& scheme, Index n, double r_min, double r_max,
           double tol) {
          const C2Consistency c =
              c2_consistency({kappa, nu, gamma}, build_grid(scheme_from(scheme), n, r_min, r_max), tol);
          py::dict d;
          d["c2_numeric"] = c.c2_numeric;
          d["c2_analytic"] = c.c2_analytic;
          d["diff"] = c.diff;
          d["oracle"] = c.oracle;
          return d;
        },
        py::arg("kappa"), py::arg("nu"), py::arg("gamma") = 0.5, py::arg("scheme") = "logarithmic",
        py::arg("N") = 2000, py::arg("r_min") = 1e-4, py::arg("r_max") = 100.0, py::arg("tol") = 1e-8);
  m.def("hardy_sweep",
        [](int kappa, const std::vector<double>& nu_values, double gamma, const std::vector<py::dict>& grids,
           bool compute_spectrum) {
          std::vector<GridSpec> specs;
          for (const auto& g : grids) {
            GridSpec spec;
            spec.n = g["N"].cast<Index>();
            if (g.contains("scheme")) spec.scheme = scheme_from(g["scheme"].cast<std::string>());
            if (g.contains("r_min")) spec.r_min = g["r_min"].cast<double>();
            if (g.contains("r_max")) spec.r_max = g["r_max"].cast<double>();
            specs.push_back(spec);
          }
          SweepOptions options;
          options.compute_spectrum = compute_spectrum;
          SweepReport report;
          {
            py::gil_scoped_release release;
            report = hardy_sweep(kappa, nu_values, gamma, specs, options);
          }
          py::list rows;
          for (const auto& row : report.rows) {
            py::dict d = grid_dict(row.grid);
            d["nu"] = row.nu;
            d["margin"] = row.margin;
            d["c2_numeric"] = row.c2_numeric;
            d["c2_analytic"] = row.c2_analytic;
            d["e1_numeric"] = row.e1_numeric;
            d["e1_analytic"] = row.e1_analytic;
            d["failure"] = row.failure;
            rows.append(d);
          }
          py::list critical;
          for (const auto& crit : report.critical) {
            py::dict d = grid_dict(crit.grid);
            d["nu_star"] = crit.nu_star;
            critical.append(d);
          }
          py::dict out;
          out["rows"] = rows;
          out["critical"] = critical;
          return out;
        },
        py::arg("kappa"), py::arg("nu_values"), py::arg("gamma"), py::arg("grids"),
        py::arg("compute_spectrum") = false);
}
