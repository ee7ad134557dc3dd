#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "clusterguard/base_quantizer.hpp"
#include "clusterguard/edit_codec.hpp"
#include "clusterguard/fof.hpp"
#include "clusterguard/metrics.hpp"
#include "clusterguard/pipeline.hpp"

namespace py = pybind11;
using namespace clusterguard;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ParticleSet to_set(const Array& a) {
    if (a.ndim() != 2 || a.shape(1) != 3) throw DataError("positions must have shape (N, 3)");
    const auto n = static_cast<std::size_t>(a.shape(0));
    std::vector<double> xs(n), ys(n), zs(n);
    const double* d = a.data();
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = d[3 * i];
        ys[i] = d[3 * i + 1];
        zs[i] = d[3 * i + 2];
    }
    return ParticleSet(std::move(xs), std::move(ys), std::move(zs));
}

Array to_array(const ParticleSet& p) {
    Array out({static_cast<py::ssize_t>(p.size()), py::ssize_t{3}});
    double* d = out.mutable_data();
    for (std::size_t i = 0; i < p.size(); ++i) {
        d[3 * i] = p.xs()[i];
        d[3 * i + 1] = p.ys()[i];
        d[3 * i + 2] = p.zs()[i];
    }
    return out;
}

Precision parse_precision(const std::string& s) {
    if (s == "f64") return Precision::f64;
    if (s == "f32") return Precision::f32;
    throw std::invalid_argument("precision must be 'f64' or 'f32'");
}

Optimizer parse_optimizer(const std::string& s) {
    if (s == "adam") return Optimizer::adam;
    if (s == "pgd") return Optimizer::vanilla_pgd;
    throw std::invalid_argument("optimizer must be 'adam' or 'pgd'");
}

py::bytes as_bytes(const std::vector<std::uint8_t>& v) {
    return {reinterpret_cast<const char*>(v.data()), v.size()};
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
    const std::string s = b;
    return {s.begin(), s.end()};
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Clustering-preserving error-bounded correction of particle positions";

    static py::exception<DataError> data_error(mod, "DataError", PyExc_ValueError);
    static py::exception<FormatError> format_error(mod, "FormatError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const DataError& e) {
            py::set_error(data_error, e.what());
        } catch (const FormatError& e) {
            py::set_error(format_error, e.what());
        }
    });

    mod.def(
        "gen_synthetic",
        [](const std::string& kind, std::size_t n, std::size_t blobs, double sigma, double background,
           std::uint64_t seed) {
            SynthSpec spec;
            if (kind == "uniform") {
                spec.kind = SynthKind::uniform;
            } else if (kind == "clustered") {
                spec.kind = SynthKind::clustered;
            } else {
                throw std::invalid_argument("kind must be 'uniform' or 'clustered'");
            }
            spec.n = n;
            spec.blobs = blobs;
            spec.sigma = sigma;
            spec.background_fraction = background;
            spec.seed = seed;
            return to_array(gen_synthetic(spec));
        },
        py::arg("kind"), py::arg("n"), py::arg("blobs") = 1, py::arg("sigma") = 0.01, py::arg("background") = 0.0,
        py::arg("seed") = 0);

    mod.def("linking_length", [](double eta, double vol, std::size_t n) { return linking_length(eta, vol, n); },
            py::arg("eta"), py::arg("vol"), py::arg("n"));

    mod.def("absolute_bound", [](double xi_rel, const Array& pos) { return absolute_bound(xi_rel, to_set(pos)); },
            py::arg("xi_rel"), py::arg("positions"));

    mod.def(
        "fof_labels",
        [](const Array& pos, double b) {
            const FofLabels f = fof_components(to_set(pos), b);
            return py::array_t<std::uint32_t>(static_cast<py::ssize_t>(f.labels.size()), f.labels.data());
        },
        py::arg("positions"), py::arg("b"));

    mod.def(
        "vulnerable_pairs",
        [](const Array& pos, double b, double xi) {
            const VulnerablePairSet v = find_vulnerable_pairs(to_set(pos), b, xi);
            py::array_t<std::uint32_t> pairs({static_cast<py::ssize_t>(v.size()), py::ssize_t{2}});
            py::array_t<bool> linked(static_cast<py::ssize_t>(v.size()));
            auto pw = pairs.mutable_unchecked<2>();
            auto lw = linked.mutable_unchecked<1>();
            for (std::size_t k = 0; k < v.size(); ++k) {
                pw(k, 0) = v.pairs[k][0];
                pw(k, 1) = v.pairs[k][1];
                lw(k) = v.orig_linked[k] != 0;
            }
            return py::make_tuple(pairs, linked);
        },
        py::arg("positions"), py::arg("b"), py::arg("xi"));

    mod.def(
        "base_compress",
        [](const Array& pos, double xi, const std::string& precision) {
            const BaseCompressed c = base_compress(to_set(pos), xi, parse_precision(precision));
            return py::make_tuple(to_array(c.decompressed), c.payload_bytes);
        },
        py::arg("positions"), py::arg("xi"), py::arg("precision") = "f64");

    mod.def(
        "correct",
        [](const Array& orig_a, const Array& hat_a, double xi, double b, int m, int ranks, double eps_loss,
           double alpha, std::size_t t_max, const std::string& optimizer, const std::string& precision) {
            const ParticleSet orig = to_set(orig_a);
            const ParticleSet hat0 = to_set(hat_a);
            const Precision prec = parse_precision(precision);
            CorrectionParams params;
            params.xi = xi;
            params.b = b;
            params.m = m;
            params.eps_loss = eps_loss;
            params.alpha = alpha;
            params.t_max = t_max;
            params.optimizer = parse_optimizer(optimizer);
            if (prec == Precision::f32) params.storage_rounding = rounding_bound(prec, {&orig, &hat0}, xi);
            PipelineResult r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(orig, hat0, params, ranks, prec);
            }
            py::dict out;
            out["edits"] = as_bytes(r.encoded);
            out["reconstructed"] = to_array(r.reconstructed);
            out["iterations"] = r.iterations;
            out["converged"] = r.converged;
            out["final_loss"] = r.final_loss;
            out["vulnerable_pairs"] = r.pairs.size();
            out["n_edits"] = r.edits.log.header.n_edits;
            return out;
        },
        py::arg("orig"), py::arg("decomp"), py::arg("xi"), py::arg("b"), py::arg("m") = 16, py::arg("ranks") = 1,
        py::arg("eps_loss") = 1e-10, py::arg("alpha") = 1e-3, py::arg("t_max") = 10'000,
        py::arg("optimizer") = "adam", py::arg("precision") = "f64");

    mod.def(
        "reconstruct",
        [](const Array& hat_a, const py::bytes& edits, const std::string& precision) {
            const EditLog log = decode(from_bytes(edits));
            return to_array(apply_edits(to_set(hat_a), log, parse_precision(precision)));
        },
        py::arg("decomp"), py::arg("edits"), py::arg("precision") = "f64");

    mod.def(
        "mcc",
        [](const Array& orig_a, const Array& recon_a, double b, double xi) {
            const ParticleSet orig = to_set(orig_a);
            return mcc(find_vulnerable_pairs(orig, b, xi), orig, to_set(recon_a), b);
        },
        py::arg("orig"), py::arg("recon"), py::arg("b"), py::arg("xi"));

    mod.def(
        "bound_violations",
        [](const Array& orig_a, const Array& recon_a, double xi) {
            return count_bound_violations(to_set(orig_a), to_set(recon_a), xi).violations;
        },
        py::arg("orig"), py::arg("recon"), py::arg("xi"));
}
