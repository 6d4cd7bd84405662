#include <charconv>
#include <fstream>
#include <sstream>

#include "eivlpe/bench.hpp"

namespace eivlpe {

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s)
{
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && (*b == ' ' || *b == '\t'))
        ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r'))
        --e;
    if (b < e && *b == '+')
        ++b;
    double v = 0.0;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

std::string pmu_csv_header() { return "t,vk_re,vk_im,vl_re,vl_im,ik_re,ik_im,il_re,il_im"; }

void write_pmu_csv(std::ostream& os, const std::vector<PmuRecord>& records)
{
    os << pmu_csv_header() << '\n';
    for (const auto& r : records) {
        os << format_double(r.t);
        for (const Phasor* p : {&r.vk, &r.vl, &r.ik, &r.il})
            os << ',' << format_double(p->re) << ',' << format_double(p->im);
        os << '\n';
    }
}

void write_pmu_csv(const fs::path& path, const std::vector<PmuRecord>& records)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open " + path.string() + " for writing");
    write_pmu_csv(os, records);
    if (!os)
        throw IoError("write failed for " + path.string());
}

std::vector<PmuRecord> read_pmu_csv(std::istream& is, const std::string& source)
{
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw IoError(source + ":" + std::to_string(lineno) + ": " + what);
    };
    if (!std::getline(is, line))
        throw IoError(source + ": empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != pmu_csv_header())
        fail("expected header '" + pmu_csv_header() + "'");
    std::vector<PmuRecord> out;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                v.push_back(parse_double(cell));
            } catch (const std::invalid_argument& ex) {
                fail(ex.what());
            }
        }
        if (v.size() != 9)
            fail("expected 9 fields, found " + std::to_string(v.size()));
        for (double x : v) {
            if (!std::isfinite(x))
                fail("non-finite value");
        }
        PmuRecord r;
        r.t = v[0];
        r.vk = {v[1], v[2]};
        r.vl = {v[3], v[4]};
        r.ik = {v[5], v[6]};
        r.il = {v[7], v[8]};
        out.push_back(r);
    }
    if (out.empty())
        throw IoError(source + ": no records");
    return out;
}

std::vector<PmuRecord> read_pmu_csv(const fs::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open " + path.string());
    return read_pmu_csv(is, path.string());
}

}  // namespace eivlpe
