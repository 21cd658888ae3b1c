#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lbvae/errors.hpp"
#include "lbvae/sweep.hpp"

namespace lbvae {

namespace {

constexpr const char *kHeader =
    "beta,lambda,trial,procedure,converged,iterations,recon_nll,kl,l2_penalty,total,sap,mig,im,joint_mi,"
    "spec_norm_b,trivial_distance,flags";
constexpr std::size_t kFields = 17;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const std::optional<double> &v) { return v ? fmt(*v) : std::string(); }

std::vector<std::string> split(const std::string &line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(const std::string &field, long line, const char *column) {
    double v = 0.0;
    const char *end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw ParseError(std::string("malformed value for '") + column + "': '" + field + "'", line);
    }
    if (!std::isfinite(v)) { throw ParseError(std::string("non-finite value for '") + column + "'", line); }
    return v;
}

long parse_long(const std::string &field, long line, const char *column) {
    long v = 0;
    const char *end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (field.empty() || ec != std::errc() || ptr != end) {
        throw ParseError(std::string("malformed integer for '") + column + "': '" + field + "'", line);
    }
    return v;
}

std::optional<double> parse_nullable(const std::string &field, long line, const char *column) {
    if (field.empty()) { return std::nullopt; }
    return parse_double(field, line, column);
}

std::string sanitize_flags(const std::string &flags) {
    std::string out = flags;
    for (char &c : out) {
        if (c == ',' || c == '\n' || c == '\r') { c = ' '; }
    }
    return out;
}

}  // namespace

std::string records_to_csv(const std::vector<SweepRecord> &records) {
    std::ostringstream out;
    out << kHeader << '\n';
    for (const SweepRecord &r : records) {
        out << fmt(r.beta) << ',' << fmt(r.lambda) << ',' << r.trial << ',' << to_string(r.procedure) << ','
            << (r.converged ? "true" : "false") << ',' << r.iterations << ',' << fmt(r.recon_nll) << ','
            << fmt(r.kl) << ',' << fmt(r.l2_penalty) << ',' << fmt(r.total) << ',' << fmt(r.sap) << ','
            << fmt(r.mig) << ',' << fmt(r.im) << ',' << fmt(r.joint_mi) << ',' << fmt(r.spec_norm_b) << ','
            << fmt(r.trivial_distance) << ',' << sanitize_flags(r.flags) << '\n';
    }
    return out.str();
}

std::vector<SweepRecord> records_from_csv(const std::string &text) {
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) { throw ParseError("empty input, header expected", 1); }
    ++lineno;
    if (!line.empty() && line.back() == '\r') { line.pop_back(); }
    if (line != kHeader) { throw ParseError("unexpected header", lineno); }

    std::vector<SweepRecord> records;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') { line.pop_back(); }
        if (line.empty()) { continue; }
        const std::vector<std::string> f = split(line);
        if (f.size() != kFields) {
            throw ParseError("expected " + std::to_string(kFields) + " fields, got " + std::to_string(f.size()),
                             lineno);
        }
        SweepRecord r;
        r.beta = parse_double(f[0], lineno, "beta");
        r.lambda = parse_double(f[1], lineno, "lambda");
        r.trial = static_cast<int>(parse_long(f[2], lineno, "trial"));
        try {
            r.procedure = procedure_from_string(f[3]);
        } catch (const ConfigError &) {
            throw ParseError("unknown procedure '" + f[3] + "'", lineno);
        }
        if (f[4] == "true") {
            r.converged = true;
        } else if (f[4] == "false") {
            r.converged = false;
        } else {
            throw ParseError("malformed value for 'converged': '" + f[4] + "'", lineno);
        }
        r.iterations = parse_long(f[5], lineno, "iterations");
        r.recon_nll = parse_nullable(f[6], lineno, "recon_nll");
        r.kl = parse_nullable(f[7], lineno, "kl");
        r.l2_penalty = parse_nullable(f[8], lineno, "l2_penalty");
        r.total = parse_nullable(f[9], lineno, "total");
        r.sap = parse_nullable(f[10], lineno, "sap");
        r.mig = parse_nullable(f[11], lineno, "mig");
        r.im = parse_nullable(f[12], lineno, "im");
        r.joint_mi = parse_nullable(f[13], lineno, "joint_mi");
        r.spec_norm_b = parse_nullable(f[14], lineno, "spec_norm_b");
        r.trivial_distance = parse_nullable(f[15], lineno, "trivial_distance");
        r.flags = f[16];
        records.push_back(std::move(r));
    }
    return records;
}

void export_records(const std::vector<SweepRecord> &records, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw ConfigError("cannot write " + path); }
    out << records_to_csv(records);
    if (!out) { throw ConfigError("failed writing " + path); }
}

std::vector<SweepRecord> import_records(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw ConfigError("cannot read " + path); }
    std::ostringstream buf;
    buf << in.rdbuf();
    return records_from_csv(buf.str());
}

}  // namespace lbvae
