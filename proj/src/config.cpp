#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "error.hpp"

namespace relaxcrb {

namespace {

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
    bool used = false;
};

struct Section {
    std::string kind; // run, range, protocol, design
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

[[noreturn]] void fail(ErrorCode code, int line, const std::string &msg) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    os << msg;
    throw Error(code, os.str());
}

std::vector<Section> split_sections(std::string_view text) {
    std::vector<Section> sections;
    sections.push_back({"run", "", 0, {}});
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(ErrorCode::ConfigError, line_no, "unterminated section header");
            std::string_view inner = trim(line.substr(1, line.size() - 2));
            const auto sp = inner.find_first_of(" \t");
            std::string kind = lower(inner.substr(0, sp));
            std::string name = sp == std::string_view::npos ? "" : std::string(trim(inner.substr(sp)));
            if (kind != "run" && kind != "range" && kind != "protocol" && kind != "design")
                fail(ErrorCode::ConfigError, line_no, "unknown section [" + kind + "]");
            if ((kind == "protocol" || kind == "design") && name.empty())
                fail(ErrorCode::ConfigError, line_no, "[" + kind + "] needs a name");
            if ((kind == "run" || kind == "range") && !name.empty())
                fail(ErrorCode::ConfigError, line_no, "[" + kind + "] takes no name");
            for (const Section &s : sections)
                if (s.line > 0 && s.kind == kind && s.name == name)
                    fail(ErrorCode::ConfigError, line_no, "duplicate section [" + kind + (name.empty() ? "" : " " + name) + "]");
            sections.push_back({kind, name, line_no, {}});
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(ErrorCode::ConfigError, line_no, "expected key = value");
        std::string key = lower(trim(line.substr(0, eq)));
        std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) fail(ErrorCode::ConfigError, line_no, "empty key");
        if (value.empty()) fail(ErrorCode::ConfigError, line_no, "empty value for '" + key + "'");
        for (const Entry &e : sections.back().entries)
            if (e.key == key) fail(ErrorCode::ConfigError, line_no, "duplicate key '" + key + "'");
        sections.back().entries.push_back({key, value, line_no, false});
    }
    return sections;
}

double parse_number(std::string_view s, int line, const std::string &key) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        fail(ErrorCode::ConfigError, line, "'" + key + "': not a number: '" + std::string(s) + "'");
    return v;
}

// Splits "<body> <unit>" where body is a number or a bracketed list.
std::pair<std::string_view, std::string> split_unit(std::string_view v, int line, const std::string &key) {
    v = trim(v);
    std::size_t end = 0;
    if (!v.empty() && v.front() == '[') {
        end = v.find(']');
        if (end == std::string_view::npos) fail(ErrorCode::ConfigError, line, "'" + key + "': missing ']'");
        ++end;
    } else {
        while (end < v.size() && (std::isdigit(static_cast<unsigned char>(v[end])) || v[end] == '.' ||
                                  v[end] == '-' || v[end] == '+' ||
                                  ((v[end] == 'e' || v[end] == 'E') && end + 1 < v.size() &&
                                   (std::isdigit(static_cast<unsigned char>(v[end + 1])) || v[end + 1] == '-' ||
                                    v[end + 1] == '+'))))
            ++end;
    }
    if (end == 0) fail(ErrorCode::ConfigError, line, "'" + key + "': not a number: '" + std::string(v) + "'");
    return {trim(v.substr(0, end)), lower(trim(v.substr(end)))};
}

double time_factor(const std::string &unit, int line, const std::string &key) {
    if (unit == "ms") return 1.0;
    if (unit == "s") return 1000.0;
    if (unit.empty()) fail(ErrorCode::UnitError, line, "'" + key + "': timing value needs a unit (ms or s)");
    fail(ErrorCode::UnitError, line, "'" + key + "': unsupported time unit '" + unit + "'");
}

void check_angle_unit(const std::string &unit, int line, const std::string &key) {
    if (!unit.empty() && unit != "deg")
        fail(ErrorCode::UnitError, line, "'" + key + "': flip angles are given in deg");
}

void check_unitless(const std::string &unit, int line, const std::string &key) {
    if (!unit.empty()) fail(ErrorCode::UnitError, line, "'" + key + "': unexpected unit '" + unit + "'");
}

std::vector<double> parse_list_body(std::string_view body, int line, const std::string &key) {
    if (body.empty() || body.front() != '[') return {parse_number(body, line, key)};
    std::string_view inner = trim(body.substr(1, body.size() - 2));
    if (inner.empty()) fail(ErrorCode::ConfigError, line, "'" + key + "': empty list");
    if (inner.find(':') != std::string_view::npos) {
        std::vector<double> parts;
        std::size_t p = 0;
        while (true) {
            const auto c = inner.find(':', p);
            parts.push_back(parse_number(inner.substr(p, c == std::string_view::npos ? inner.size() - p : c - p), line, key));
            if (c == std::string_view::npos) break;
            p = c + 1;
        }
        if (parts.size() != 3) fail(ErrorCode::ConfigError, line, "'" + key + "': range must be [start:step:end]");
        if (!(parts[1] > 0.0)) fail(ErrorCode::ConfigError, line, "'" + key + "': range step must be > 0");
        if (parts[2] < parts[0]) fail(ErrorCode::ConfigError, line, "'" + key + "': range end before start");
        return colon_range(parts[0], parts[1], parts[2]);
    }
    std::vector<double> out;
    std::string buf(inner);
    std::replace(buf.begin(), buf.end(), ',', ' ');
    std::istringstream is(buf);
    std::string tok;
    while (is >> tok) out.push_back(parse_number(tok, line, key));
    return out;
}

class Reader {
public:
    explicit Reader(Section &s) : s_(s) {}

    Entry *take(const std::string &key) {
        for (Entry &e : s_.entries)
            if (e.key == key) {
                e.used = true;
                return &e;
            }
        return nullptr;
    }
    Entry &require(const std::string &key) {
        if (Entry *e = take(key)) return *e;
        fail(ErrorCode::MissingField, s_.line, where() + " is missing required field '" + key + "'");
    }

    std::optional<double> time(const std::string &key) {
        Entry *e = take(key);
        if (!e) return std::nullopt;
        auto [body, unit] = split_unit(e->value, e->line, key);
        const double f = time_factor(unit, e->line, key);
        if (!body.empty() && body.front() == '[') fail(ErrorCode::ConfigError, e->line, "'" + key + "': expected a single value");
        return parse_number(body, e->line, key) * f;
    }
    double time_required(const std::string &key) {
        require(key).used = false;
        return *time(key);
    }
    std::optional<std::vector<double>> time_list(const std::string &key) {
        Entry *e = take(key);
        if (!e) return std::nullopt;
        auto [body, unit] = split_unit(e->value, e->line, key);
        const double f = time_factor(unit, e->line, key);
        auto xs = parse_list_body(body, e->line, key);
        for (double &x : xs) x *= f;
        return xs;
    }
    std::vector<double> time_list_required(const std::string &key) {
        require(key).used = false;
        return *time_list(key);
    }
    std::optional<std::vector<double>> angle_list(const std::string &key) {
        Entry *e = take(key);
        if (!e) return std::nullopt;
        auto [body, unit] = split_unit(e->value, e->line, key);
        check_angle_unit(unit, e->line, key);
        return parse_list_body(body, e->line, key);
    }
    std::optional<double> angle(const std::string &key) {
        auto xs = angle_list(key);
        if (!xs) return std::nullopt;
        if (xs->size() != 1) fail(ErrorCode::ConfigError, line_of(key), "'" + key + "': expected a single angle");
        return xs->front();
    }
    std::optional<double> number(const std::string &key) {
        Entry *e = take(key);
        if (!e) return std::nullopt;
        auto [body, unit] = split_unit(e->value, e->line, key);
        check_unitless(unit, e->line, key);
        return parse_number(body, e->line, key);
    }
    std::optional<long long> integer(const std::string &key) {
        const auto v = number(key);
        if (!v) return std::nullopt;
        if (std::floor(*v) != *v) fail(ErrorCode::ConfigError, line_of(key), "'" + key + "': expected an integer");
        return static_cast<long long>(*v);
    }
    std::optional<std::vector<double>> number_list(const std::string &key) {
        Entry *e = take(key);
        if (!e) return std::nullopt;
        auto [body, unit] = split_unit(e->value, e->line, key);
        check_unitless(unit, e->line, key);
        return parse_list_body(body, e->line, key);
    }
    std::optional<std::string> word(const std::string &key) {
        Entry *e = take(key);
        if (!e) return std::nullopt;
        return e->value;
    }
    std::optional<bool> boolean(const std::string &key) {
        const auto w = word(key);
        if (!w) return std::nullopt;
        const std::string v = lower(*w);
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        fail(ErrorCode::ConfigError, line_of(key), "'" + key + "': expected true or false");
    }
    // Two-element timing list, e.g. `t1 = [1000, 2000] ms`.
    std::optional<Bounds> time_bounds(const std::string &key) {
        const auto xs = time_list(key);
        if (!xs) return std::nullopt;
        if (xs->size() != 2) fail(ErrorCode::ConfigError, line_of(key), "'" + key + "': expected [min, max]");
        return Bounds{(*xs)[0], (*xs)[1]};
    }
    std::optional<Bounds> angle_bounds(const std::string &key) {
        const auto xs = angle_list(key);
        if (!xs) return std::nullopt;
        if (xs->size() != 2) fail(ErrorCode::ConfigError, line_of(key), "'" + key + "': expected [min, max]");
        return Bounds{(*xs)[0], (*xs)[1]};
    }

    int line_of(const std::string &key) const {
        for (const Entry &e : s_.entries)
            if (e.key == key) return e.line;
        return s_.line;
    }
    std::string where() const { return "[" + s_.kind + (s_.name.empty() ? "" : " " + s_.name) + "]"; }

    void finish() const {
        for (const Entry &e : s_.entries)
            if (!e.used) fail(ErrorCode::ConfigError, e.line, "unknown key '" + e.key + "' in " + where());
    }

private:
    Section &s_;
};

Family read_family(Reader &r) {
    Entry &e = r.require("family");
    const auto f = family_from_name(std::string(trim(e.value)) == "" ? "" : [&] {
        std::string up(trim(e.value));
        std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
        return up;
    }());
    if (!f) fail(ErrorCode::ConfigError, e.line, "unknown family '" + e.value + "'");
    return *f;
}

SequenceProtocol read_protocol(Reader &r, Family family) {
    switch (family) {
    case Family::CIR: return seq::Cir{r.time_list_required("ti"), r.time_required("w")};
    case Family::SR: return seq::Sr{r.time_list_required("ti")};
    case Family::FIR1: return seq::Fir1{r.time_list_required("ti"), r.time_required("w")};
    case Family::FIR2: return seq::Fir2{r.time_list_required("ti"), r.time_required("tr")};
    case Family::LL: {
        seq::LookLocker p;
        r.require("alpha").used = false;
        p.alpha = *r.angle("alpha");
        p.t = r.time_list_required("t");
        p.tr = r.time_required("tr");
        if (auto rec = r.word("recovery")) {
            const std::string v = lower(*rec);
            if (v == "steady_state") p.recovery = seq::LlRecovery::SteadyState;
            else if (v == "full") p.recovery = seq::LlRecovery::Full;
            else fail(ErrorCode::ConfigError, r.line_of("recovery"), "recovery must be steady_state or full");
        }
        return p;
    }
    case Family::SEIR: {
        seq::Seir p;
        p.tr_ir = r.time_required("tr_ir");
        p.ti = r.time_required("ti");
        p.tr_se = r.time_required("tr_se");
        p.te = r.time_required("te");
        if (auto n = r.integer("n_echo")) p.n_echo = static_cast<int>(*n);
        if (auto b = r.boolean("ir_recovery_term")) p.ir_recovery_term = *b;
        if (auto b = r.boolean("ir_echo_weighting")) p.ir_echo_weighting = *b;
        if (auto t = r.word("timing")) {
            const std::string v = lower(*t);
            if (v == "blocks_plus_ti") p.timing = seq::SeirTiming::BlocksPlusTi;
            else if (v == "blocks") p.timing = seq::SeirTiming::Blocks;
            else fail(ErrorCode::ConfigError, r.line_of("timing"), "timing must be blocks_plus_ti or blocks");
        }
        return p;
    }
    case Family::DESPOT: {
        seq::Despot p;
        if (auto a = r.angle_list("alpha_spgr")) {
            p.alpha_spgr = *a;
            p.tr_spgr = r.time_required("tr_spgr");
        }
        r.require("alpha_ssfp").used = false;
        p.alpha_ssfp = *r.angle_list("alpha_ssfp");
        p.tr_ssfp = r.time_required("tr_ssfp");
        return p;
    }
    }
    throw Error(ErrorCode::Internal, "unknown family");
}

int default_n_acq(Family f) {
    switch (f) {
    case Family::CIR: return 5;
    case Family::SR: return 12;
    case Family::FIR1: return 7;
    case Family::FIR2: return 9;
    case Family::LL: return 15;
    case Family::SEIR: return 5;
    case Family::DESPOT: return 3;
    }
    return 2;
}

DesignSpec read_design(Reader &r, Family family) {
    DesignSpec d;
    d.family = family;
    d.rho = is_joint(family) ? 0.5 : 1.0;
    d.n_acq = {default_n_acq(family)};
    if (auto n = r.integer("n_echo")) {
        d.n_echo = static_cast<int>(*n);
        d.n_acq = {d.n_echo + 1};
    }
    if (auto xs = r.number_list("n_acq")) {
        d.n_acq.clear();
        for (double x : *xs) {
            if (std::floor(x) != x || x < 1) fail(ErrorCode::ConfigError, r.line_of("n_acq"), "n_acq entries must be positive integers");
            d.n_acq.push_back(static_cast<int>(x));
        }
    }
    if (auto v = r.number("rho")) {
        if (!is_joint(family) && *v != 1.0)
            fail(ErrorCode::ConfigError, r.line_of("rho"), "rho is fixed to 1 for T1-only families");
        d.rho = *v;
    }
    if (auto v = r.integer("multistart")) d.multistart = static_cast<int>(*v);
    if (auto v = r.integer("seed")) d.seed = static_cast<std::uint64_t>(*v);
    if (auto v = r.integer("max_evals")) d.nm.max_evals = static_cast<int>(*v);
    if (auto b = r.time_bounds("ti")) d.ti = *b;
    if (auto b = r.time_bounds("step")) d.step = *b;
    if (auto b = r.time_bounds("timing")) d.timing = *b;
    if (auto b = r.time_bounds("w")) d.w = *b;
    if (auto v = r.time("w_max")) d.w.hi = *v;
    if (auto b = r.time_bounds("tr")) d.tr = *b;
    if (auto b = r.time_bounds("gap")) d.gap = *b;
    if (auto b = r.time_bounds("te")) d.te = *b;
    if (auto b = r.angle_bounds("alpha")) d.alpha = *b;
    if (auto b = r.angle_bounds("alpha_ssfp")) d.alpha_ssfp = *b;
    if (auto v = r.integer("n_ssfp")) d.n_ssfp = static_cast<int>(*v);
    if (auto v = r.time("tr_spgr")) d.tr_spgr = *v;
    if (auto v = r.time("tr_ssfp")) d.tr_ssfp = *v;
    try {
        d.validate();
    } catch (const Error &e) {
        fail(ErrorCode::ConfigError, 0, r.where() + ": " + e.what());
    }
    return d;
}

} // namespace

std::string_view command_name(Command c) {
    switch (c) {
    case Command::Evaluate: return "evaluate";
    case Command::Optimize: return "optimize";
    case Command::Simulate: return "simulate";
    case Command::Compare: return "compare";
    }
    return "?";
}

std::optional<Command> command_from_name(std::string_view name) {
    for (Command c : {Command::Evaluate, Command::Optimize, Command::Simulate, Command::Compare})
        if (command_name(c) == name) return c;
    return std::nullopt;
}

void RunConfig::validate() const {
    if (!(snr > 0.0) || !std::isfinite(snr)) throw Error(ErrorCode::ConfigError, "snr must be > 0");
    if (!(t_scan > 0.0) || !std::isfinite(t_scan)) throw Error(ErrorCode::ConfigError, "t_scan must be > 0");
    if (n_trials < 1) throw Error(ErrorCode::ConfigError, "n_trials must be >= 1");
    if (threads < 1) throw Error(ErrorCode::ConfigError, "threads must be >= 1");
    if (mc_grid_t1 < 1 || mc_grid_t2 < 1) throw Error(ErrorCode::ConfigError, "Monte Carlo grid counts must be >= 1");
    try {
        range.validate();
        mc_range().validate();
    } catch (const Error &e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
}

TissueRange RunConfig::mc_range() const {
    TissueRange r = range;
    r.grid_t1 = mc_grid_t1;
    r.grid_t2 = mc_grid_t2;
    return r;
}

RunConfig parse_config(std::string_view text) {
    std::vector<Section> sections = split_sections(text);
    RunConfig cfg;

    for (Section &s : sections) {
        Reader r(s);
        if (s.kind == "run") {
            if (auto c = r.word("command")) {
                const auto cmd = command_from_name(lower(*c));
                if (!cmd) fail(ErrorCode::ConfigError, r.line_of("command"), "unknown command '" + *c + "'");
                cfg.command = cmd;
            }
            if (auto v = r.number("snr")) cfg.snr = *v;
            if (auto v = r.time("t_scan")) cfg.t_scan = *v;
            if (auto v = r.number("m0")) cfg.range.m0 = *v;
            if (auto v = r.integer("n_trials")) cfg.n_trials = static_cast<int>(*v);
            if (auto v = r.integer("seed")) {
                if (*v < 0) fail(ErrorCode::ConfigError, r.line_of("seed"), "seed must be >= 0");
                cfg.seed = static_cast<std::uint64_t>(*v);
            }
            if (auto v = r.integer("threads")) cfg.threads = static_cast<int>(*v);
            if (auto v = r.word("format")) {
                const std::string f = lower(*v);
                if (f == "csv") cfg.format = OutputFormat::Csv;
                else if (f == "json") cfg.format = OutputFormat::Json;
                else fail(ErrorCode::ConfigError, r.line_of("format"), "format must be csv or json");
            }
            if (auto v = r.word("out")) cfg.out_dir = *v;
            if (auto v = r.time("init_t1")) cfg.init.t1 = *v;
            if (auto v = r.time("init_t2")) cfg.init.t2 = *v;
        } else if (s.kind == "range") {
            if (auto b = r.time_bounds("t1")) {
                cfg.range.t1_min = b->lo;
                cfg.range.t1_max = b->hi;
            }
            if (auto b = r.time_bounds("t2")) {
                cfg.range.t2_min = b->lo;
                cfg.range.t2_max = b->hi;
            }
            if (auto v = r.time("t1_min")) cfg.range.t1_min = *v;
            if (auto v = r.time("t1_max")) cfg.range.t1_max = *v;
            if (auto v = r.time("t2_min")) cfg.range.t2_min = *v;
            if (auto v = r.time("t2_max")) cfg.range.t2_max = *v;
            if (auto v = r.number("m0")) cfg.range.m0 = *v;
            if (auto v = r.integer("grid_t1")) cfg.range.grid_t1 = static_cast<int>(*v);
            if (auto v = r.integer("grid_t2")) cfg.range.grid_t2 = static_cast<int>(*v);
            if (auto v = r.integer("mc_grid_t1")) cfg.mc_grid_t1 = static_cast<int>(*v);
            if (auto v = r.integer("mc_grid_t2")) cfg.mc_grid_t2 = static_cast<int>(*v);
        } else if (s.kind == "protocol") {
            const Family family = read_family(r);
            try {
                cfg.protocols.push_back({s.name, read_protocol(r, family)});
            } catch (const Error &e) {
                if (e.code() != ErrorCode::InvalidProtocol) throw;
                fail(ErrorCode::ConfigError, s.line, r.where() + ": " + e.what());
            }
        } else if (s.kind == "design") {
            const Family family = read_family(r);
            cfg.designs.push_back({s.name, read_design(r, family)});
        }
        r.finish();
    }

    if (cfg.protocols.empty() && cfg.designs.empty())
        throw Error(ErrorCode::ConfigError, "config defines no [protocol] or [design] section");
    cfg.validate();
    return cfg;
}

} // namespace relaxcrb
