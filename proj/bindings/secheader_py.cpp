#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "secheader/catalog.hpp"
#include "secheader/guard.hpp"
#include "secheader/parse.hpp"
#include "secheader/policy.hpp"
#include "secheader/report.hpp"

namespace py = pybind11;
using namespace secheader;

namespace {

std::vector<parse::RawHeader> to_raw_headers(
    const std::vector<std::pair<std::string, std::string>>& headers) {
    std::vector<parse::RawHeader> out;
    out.reserve(headers.size());
    for (const auto& [n, v] : headers) out.emplace_back(n, v);
    return out;
}

const char* update_result_name(policy::HstsUpdateResult r) {
    switch (r) {
        case policy::HstsUpdateResult::Applied: return "applied";
        case policy::HstsUpdateResult::Removed: return "removed";
        case policy::HstsUpdateResult::IgnoredInsecure: return "ignored-insecure";
        case policy::HstsUpdateResult::IgnoredIpLiteral: return "ignored-ip-literal";
        case policy::HstsUpdateResult::NoEntry: return "no-entry";
    }
    return "?";
}

}  // namespace

PYBIND11_MODULE(_secheader, m) {
    m.doc() = "HTTP security-header toolkit";

    py::register_exception<catalog::UnknownHeaderError>(m, "UnknownHeaderError");
    py::register_exception<guard::SinkDenied>(m, "SinkDenied");

    m.def("classify", [](const std::string& name) -> py::object {
        auto entry = catalog::Catalog::embedded().classify(HeaderName(name));
        if (!entry) return py::none();
        py::dict d;
        d["name"] = entry->name.str();
        d["rank"] = entry->rank;
        d["occurrences"] = entry->occurrences;
        d["purpose"] = std::string(catalog::to_string(entry->purpose));
        d["relevance"] = std::string(catalog::to_string(entry->relevance));
        d["note"] = entry->note;
        if (entry->threat) {
            d["threat"] = std::string(catalog::to_string(*entry->threat));
        }
        return d;
    });

    m.def("threat_of", [](const std::string& name) -> py::object {
        auto t = catalog::Catalog::embedded().threat_of(HeaderName(name));
        if (!t) return py::none();
        return py::str(std::string(catalog::to_string(*t)));
    });

    m.def("client_support", [](const std::string& client, const std::string& name) {
        auto id = catalog::client_from_string(client);
        if (!id) throw py::value_error("unknown client: " + client);
        auto level =
            catalog::Catalog::embedded().client_support(*id, HeaderName(name));
        return std::string(catalog::to_string(level));
    });

    m.def("parse_hsts", [](const std::string& value) {
        auto d = parse::parse_hsts(value);
        py::dict out;
        out["max_age"] = d.max_age;
        out["include_subdomains"] = d.include_subdomains;
        out["preload"] = d.preload;
        return out;
    });

    m.def("canonical_header",
          [](const std::string& name, const std::string& value) -> py::object {
              auto r = parse::parse_security_header({name, value});
              if (!r.value) return py::none();
              return py::str(parse::canonical(*r.value));
          });

    m.def("security_table", [] {
        auto rows = report::security_rows_from_catalog();
        py::list out;
        for (const auto& r : rows) {
            py::dict d;
            d["name"] = r.name;
            d["threat"] = std::string(catalog::to_string(r.threat));
            d["total"] = r.counts.total;
            d["open"] = r.counts.open;
            d["closed"] = r.counts.closed;
            d["total_pct"] = r.total_pct;
            d["open_pct"] = r.open_pct;
            d["closed_pct"] = r.closed_pct;
            out.append(std::move(d));
        }
        return out;
    });

    m.def("non_adoption_average", [] {
        auto rows = report::security_rows_from_catalog();
        return report::non_adoption_average(rows);
    });

    m.def("pct_round_half_up", &report::pct_round_half_up);

    py::class_<policy::HstsStore>(m, "HstsStore")
        .def(py::init<>())
        .def_static("load",
                    [](const std::string& path) {
                        return policy::HstsStore::load(path);
                    })
        .def("update",
             [](policy::HstsStore& self, const std::string& host,
                const std::string& header_value, bool secure, std::int64_t now) {
                 auto d = parse::parse_hsts(header_value);
                 return std::string(
                     update_result_name(self.update(host, d, secure, now)));
             })
        .def("covers", &policy::HstsStore::covers)
        .def("rewrite", &policy::HstsStore::rewrite)
        .def("purge", &policy::HstsStore::purge)
        .def("save", &policy::HstsStore::save)
        .def("__len__", &policy::HstsStore::size);

    py::class_<guard::GuardedBody>(m, "GuardedBody")
        .def_static(
            "from_response",
            [](py::bytes body,
               const std::vector<std::pair<std::string, std::string>>& headers,
               const std::string& origin_url) {
                auto raw = to_raw_headers(headers);
                return guard::GuardedBody::from_response(std::string(body), raw,
                                                         origin_url);
            },
            py::arg("body"), py::arg("headers"), py::arg("origin_url"))
        .def("interpret_as",
             [](const guard::GuardedBody& self, const std::string& language) {
                 return py::bytes(self.interpret_as(language));
             })
        .def("persist", &guard::GuardedBody::persist)
        .def("persist_hashed",
             [](const guard::GuardedBody& self, const std::string& sink,
                const std::string& algorithm) {
                 auto digest = self.persist_hashed(sink, algorithm);
                 return py::bytes(reinterpret_cast<const char*>(digest.data()),
                                  digest.size());
             },
             py::arg("sink"), py::arg("algorithm") = "sha256")
        .def("__len__", &guard::GuardedBody::inspect_len);
}
