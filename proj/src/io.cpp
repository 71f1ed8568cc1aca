#include "offrl/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace offrl {

ParseError::ParseError(std::string source, std::string location, const std::string& message)
    : std::runtime_error(source + ": " + location + ": " + message), source_(std::move(source)),
      location_(std::move(location)) {}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

Json parse_json(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character.
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        int line = 1, column = 1;
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::string msg = e.what();
        if (const auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
        throw ParseError(source, "line " + std::to_string(line) + ", column " + std::to_string(column), msg);
    }
}

namespace {

// Structural access with JSON-pointer error locations.
class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
        throw ParseError(source_, ptr.empty() ? "/" : ptr, msg);
    }

    const Json& field(const Json& obj, const std::string& key, const std::string& ptr) const {
        if (!obj.is_object()) fail(ptr, "expected an object");
        const auto it = obj.find(key);
        if (it == obj.end()) fail(ptr + "/" + key, "missing field");
        return *it;
    }

    void only_keys(const Json& obj, std::initializer_list<const char*> keys, const std::string& ptr) const {
        if (!obj.is_object()) fail(ptr, "expected an object");
        for (const auto& [k, v] : obj.items()) {
            bool known = false;
            for (const char* key : keys) known = known || k == key;
            if (!known) fail(ptr + "/" + k, "unknown field");
        }
    }

    double number(const Json& j, const std::string& ptr) const {
        if (j.is_number()) return j.get<double>();
        if (j.is_string()) {
            const auto& s = j.get_ref<const std::string&>();
            if (s == "inf") return std::numeric_limits<double>::infinity();
            if (s == "-inf") return -std::numeric_limits<double>::infinity();
            if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        }
        fail(ptr, "expected a number");
    }

    std::int64_t integer(const Json& j, const std::string& ptr) const {
        if (j.is_number_integer()) return j.get<std::int64_t>();
        if (j.is_number_float()) {
            const double x = j.get<double>();
            if (x == std::floor(x) && std::abs(x) < 9.0e15) return static_cast<std::int64_t>(x);
        }
        fail(ptr, "expected an integer");
    }

    std::uint64_t unsigned_integer(const Json& j, const std::string& ptr) const {
        if (j.is_number_unsigned()) return j.get<std::uint64_t>();
        if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
        fail(ptr, "expected a nonnegative integer");
    }

    int positive(const Json& j, const std::string& ptr) const {
        const auto v = integer(j, ptr);
        if (v < 1 || v > std::numeric_limits<int>::max()) fail(ptr, "expected a positive integer");
        return static_cast<int>(v);
    }

    std::string string(const Json& j, const std::string& ptr) const {
        if (!j.is_string()) fail(ptr, "expected a string");
        return j.get<std::string>();
    }

    bool boolean(const Json& j, const std::string& ptr) const {
        if (!j.is_boolean()) fail(ptr, "expected a boolean");
        return j.get<bool>();
    }

    // Reads a nested array of the given shape into `out`, row-major.
    void nested(const Json& j, std::span<const int> dims, const std::string& ptr, std::vector<double>& out) const {
        if (!j.is_array()) fail(ptr, "expected an array");
        if (static_cast<int>(j.size()) != dims[0])
            fail(ptr, "expected " + std::to_string(dims[0]) + " entries, found " + std::to_string(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string child = ptr + "/" + std::to_string(i);
            if (dims.size() == 1)
                out.push_back(number(j[i], child));
            else
                nested(j[i], dims.subspan(1), child, out);
        }
    }

private:
    std::string source_;
};

Json number_json(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

Json nested_json(std::span<const double> flat, std::span<const int> dims) {
    Json arr = Json::array();
    if (dims.size() == 1) {
        for (double x : flat) arr.push_back(number_json(x));
        return arr;
    }
    std::size_t stride = 1;
    for (std::size_t i = 1; i < dims.size(); ++i) stride *= static_cast<std::size_t>(dims[i]);
    for (int i = 0; i < dims[0]; ++i) arr.push_back(nested_json(flat.subspan(i * stride, stride), dims.subspan(1)));
    return arr;
}

Json table_json(const SATable& t) {
    const std::array<int, 3> dims{t.steps(), t.states(), t.actions()};
    return nested_json(t.data(), dims);
}

Json table_json(const StateTable& t) {
    const std::array<int, 2> dims{t.steps(), t.states()};
    return nested_json(t.data(), dims);
}

}  // namespace

Json to_json(const Mdp& m) {
    const int H = m.horizon(), S = m.num_states(), A = m.num_actions();
    const std::array<int, 4> pdims{H, S, A, S};
    return Json{{"H", H},
                {"S", S},
                {"A", A},
                {"P", nested_json(m.transitions(), pdims)},
                {"r", table_json(m.rewards())},
                {"reward_noise", m.reward_noise() == RewardNoise::Bernoulli ? "bernoulli" : "deterministic"},
                {"d1", nested_json(m.initial(), std::array<int, 1>{S})}};
}

Mdp mdp_from_json(const Json& j, const std::string& source) {
    Reader rd(source);
    rd.only_keys(j, {"H", "S", "A", "P", "r", "reward_noise", "d1"}, "");
    const int H = rd.positive(rd.field(j, "H", ""), "/H");
    const int S = rd.positive(rd.field(j, "S", ""), "/S");
    const int A = rd.positive(rd.field(j, "A", ""), "/A");
    RewardNoise noise = RewardNoise::Deterministic;
    if (j.contains("reward_noise")) {
        const auto kind = rd.string(j["reward_noise"], "/reward_noise");
        if (kind == "bernoulli")
            noise = RewardNoise::Bernoulli;
        else if (kind != "deterministic")
            rd.fail("/reward_noise", "expected \"deterministic\" or \"bernoulli\"");
    }
    Mdp m(H, S, A, noise);
    std::vector<double> flat;
    const std::array<int, 4> pdims{H, S, A, S};
    rd.nested(rd.field(j, "P", ""), pdims, "/P", flat);
    m.transitions() = std::move(flat);
    flat.clear();
    const std::array<int, 3> rdims{H, S, A};
    rd.nested(rd.field(j, "r", ""), rdims, "/r", flat);
    m.rewards().data() = std::move(flat);
    flat.clear();
    const std::array<int, 1> ddims{S};
    rd.nested(rd.field(j, "d1", ""), ddims, "/d1", flat);
    m.initial() = std::move(flat);
    validate_mdp(m);
    return m;
}

void save_mdp(const std::filesystem::path& path, const Mdp& m) { write_text(path, to_json(m).dump(2) + "\n"); }

Mdp load_mdp(const std::filesystem::path& path) {
    const auto src = path.string();
    return mdp_from_json(parse_json(read_text(path), src), src);
}

Json to_json(const Policy& pi) {
    return Json{{"H", pi.horizon()}, {"S", pi.num_states()}, {"A", pi.num_actions()}, {"pi", table_json(pi.probs())}};
}

Policy policy_from_json(const Json& j, const std::string& source) {
    Reader rd(source);
    rd.only_keys(j, {"H", "S", "A", "pi"}, "");
    const int H = rd.positive(rd.field(j, "H", ""), "/H");
    const int S = rd.positive(rd.field(j, "S", ""), "/S");
    const int A = rd.positive(rd.field(j, "A", ""), "/A");
    Policy pi(H, S, A);
    std::vector<double> flat;
    const std::array<int, 3> dims{H, S, A};
    rd.nested(rd.field(j, "pi", ""), dims, "/pi", flat);
    pi.probs().data() = std::move(flat);
    for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
            double total = 0.0;
            for (double x : pi.row(h, s)) {
                if (!(x >= 0.0)) rd.fail("/pi/" + std::to_string(h) + "/" + std::to_string(s), "negative probability");
                total += x;
            }
            if (std::abs(total - 1.0) > kInputTolerance)
                rd.fail("/pi/" + std::to_string(h) + "/" + std::to_string(s), "row does not sum to 1");
        }
    return pi;
}

void save_policy(const std::filesystem::path& path, const Policy& pi) { write_text(path, to_json(pi).dump(2) + "\n"); }

Policy load_policy(const std::filesystem::path& path) {
    const auto src = path.string();
    return policy_from_json(parse_json(read_text(path), src), src);
}

namespace {

constexpr std::string_view kCsvMagic = "# offrl-dataset";
constexpr std::string_view kBinaryMagic = "OFRLDS01";

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void check_dataset(const Dataset& d, const std::string& source, const std::string& location) {
    try {
        validate_dataset(d);
    } catch (const std::invalid_argument& e) {
        throw ParseError(source, location, e.what());
    }
}

}  // namespace

std::string dataset_to_csv(const Dataset& d) {
    const auto& m = d.meta;
    std::string out;
    out.reserve(d.steps.size() * 24 + 128);
    out += std::string(kCsvMagic) + " num_episodes=" + std::to_string(m.num_episodes) +
           " horizon=" + std::to_string(m.horizon) + " num_states=" + std::to_string(m.num_states) +
           " num_actions=" + std::to_string(m.num_actions) + " seed=" + std::to_string(m.seed) + "\n";
    out += "episode,h,s,a,r,s_next\n";
    for (std::int64_t i = 0; i < m.num_episodes; ++i)
        for (int h = 0; h < m.horizon; ++h) {
            const auto& t = d.at(i, h);
            out += std::to_string(i) + ',' + std::to_string(h) + ',' + std::to_string(t.state) + ',' +
                   std::to_string(t.action) + ',' + format_double(t.reward) + ',' + std::to_string(t.next_state) + '\n';
        }
    return out;
}

Dataset dataset_from_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto where = [&] { return "line " + std::to_string(line_no); };

    Dataset d;
    ++line_no;
    if (!std::getline(in, line) || line.rfind(kCsvMagic, 0) != 0)
        throw ParseError(source, where(), "missing '# offrl-dataset' meta header");
    bool seen[5] = {};
    for (auto token : split(std::string_view(line).substr(kCsvMagic.size()), ' ')) {
        if (token.empty()) continue;
        const auto eq = token.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, where(), "malformed meta entry '" + std::string(token) + "'");
        const auto key = token.substr(0, eq), value = token.substr(eq + 1);
        bool ok = false;
        if (key == "num_episodes") ok = parse_number(value, d.meta.num_episodes), seen[0] = true;
        else if (key == "horizon") ok = parse_number(value, d.meta.horizon), seen[1] = true;
        else if (key == "num_states") ok = parse_number(value, d.meta.num_states), seen[2] = true;
        else if (key == "num_actions") ok = parse_number(value, d.meta.num_actions), seen[3] = true;
        else if (key == "seed") ok = parse_number(value, d.meta.seed), seen[4] = true;
        else throw ParseError(source, where(), "unknown meta key '" + std::string(key) + "'");
        if (!ok) throw ParseError(source, where(), "bad value for meta key '" + std::string(key) + "'");
    }
    for (bool s : seen)
        if (!s) throw ParseError(source, where(), "meta header is missing a field");
    if (d.meta.num_episodes < 0 || d.meta.horizon < 1 || d.meta.num_states < 1 || d.meta.num_actions < 1)
        throw ParseError(source, where(), "meta sizes out of range");

    ++line_no;
    if (!std::getline(in, line) || line != "episode,h,s,a,r,s_next")
        throw ParseError(source, where(), "expected column header 'episode,h,s,a,r,s_next'");

    const std::int64_t expected = d.meta.num_episodes * d.meta.horizon;
    d.steps.reserve(static_cast<std::size_t>(expected));
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 6) throw ParseError(source, where(), "expected 6 columns");
        std::int64_t episode = 0;
        int h = 0;
        Transition t;
        if (!parse_number(cols[0], episode) || !parse_number(cols[1], h) || !parse_number(cols[2], t.state) ||
            !parse_number(cols[3], t.action) || !parse_number(cols[4], t.reward) || !parse_number(cols[5], t.next_state))
            throw ParseError(source, where(), "malformed number");
        const auto index = static_cast<std::int64_t>(d.steps.size());
        if (index >= expected) throw ParseError(source, where(), "more rows than the meta header declares");
        if (episode != index / d.meta.horizon || h != index % d.meta.horizon)
            throw ParseError(source, where(), "rows must be episode-major with h ascending");
        d.steps.push_back(t);
    }
    if (static_cast<std::int64_t>(d.steps.size()) != expected)
        throw ParseError(source, where(), "fewer rows than the meta header declares");
    check_dataset(d, source, "body");
    return d;
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
public:
    ByteReader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

    std::uint64_t u64() { return read(8); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
    bool done() const { return pos_ == bytes_.size(); }
    std::size_t offset() const { return pos_; }

private:
    std::uint64_t read(int width) {
        if (pos_ + width > bytes_.size())
            throw ParseError(source_, "byte " + std::to_string(pos_), "unexpected end of file");
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += width;
        return v;
    }

    const std::string& bytes_;
    const std::string& source_;
    std::size_t pos_ = 8;
};

}  // namespace

std::string dataset_to_binary(const Dataset& d) {
    std::string out(kBinaryMagic);
    put_u64(out, static_cast<std::uint64_t>(d.meta.num_episodes));
    put_u32(out, static_cast<std::uint32_t>(d.meta.horizon));
    put_u32(out, static_cast<std::uint32_t>(d.meta.num_states));
    put_u32(out, static_cast<std::uint32_t>(d.meta.num_actions));
    put_u64(out, d.meta.seed);
    for (const auto& t : d.steps) {
        put_u32(out, static_cast<std::uint32_t>(t.state));
        put_u32(out, static_cast<std::uint32_t>(t.action));
        put_u64(out, std::bit_cast<std::uint64_t>(t.reward));
        put_u32(out, static_cast<std::uint32_t>(t.next_state));
    }
    return out;
}

Dataset dataset_from_binary(const std::string& bytes, const std::string& source) {
    if (bytes.compare(0, kBinaryMagic.size(), kBinaryMagic) != 0) throw ParseError(source, "byte 0", "bad magic");
    ByteReader rd(bytes, source);
    Dataset d;
    d.meta.num_episodes = static_cast<std::int64_t>(rd.u64());
    d.meta.horizon = static_cast<std::int32_t>(rd.u32());
    d.meta.num_states = static_cast<std::int32_t>(rd.u32());
    d.meta.num_actions = static_cast<std::int32_t>(rd.u32());
    d.meta.seed = rd.u64();
    if (d.meta.num_episodes < 0 || d.meta.horizon < 1 || d.meta.num_states < 1 || d.meta.num_actions < 1)
        throw ParseError(source, "byte 8", "header sizes out of range");
    const std::size_t record = 20;
    const auto total = static_cast<std::uint64_t>(d.meta.num_episodes) * static_cast<std::uint64_t>(d.meta.horizon);
    if (total > (bytes.size() - rd.offset()) / record)
        throw ParseError(source, "byte " + std::to_string(rd.offset()), "file shorter than the header declares");
    d.steps.resize(total);
    for (auto& t : d.steps) {
        t.state = static_cast<std::int32_t>(rd.u32());
        t.action = static_cast<std::int32_t>(rd.u32());
        t.reward = std::bit_cast<double>(rd.u64());
        t.next_state = static_cast<std::int32_t>(rd.u32());
    }
    if (!rd.done()) throw ParseError(source, "byte " + std::to_string(rd.offset()), "trailing bytes");
    check_dataset(d, source, "body");
    return d;
}

void save_dataset(const std::filesystem::path& path, const Dataset& d) {
    write_text(path, path.extension() == ".bin" ? dataset_to_binary(d) : dataset_to_csv(d));
}

Dataset load_dataset(const std::filesystem::path& path) {
    const auto bytes = read_text(path);
    const auto src = path.string();
    if (bytes.compare(0, kBinaryMagic.size(), kBinaryMagic) == 0) return dataset_from_binary(bytes, src);
    return dataset_from_csv(bytes, src);
}

Json to_json(const BoundBreakdown& b) {
    Json q = Json::array();
    for (double x : b.q_star_per_h) q.push_back(number_json(x));
    return Json{{"iota", number_json(b.iota)},
                {"main_term", number_json(b.main_term)},
                {"higher_order", number_json(b.higher_order)},
                {"apvi_bound", number_json(b.apvi_bound)},
                {"vpvi_bound", number_json(b.vpvi_bound)},
                {"uniform_bound", number_json(b.uniform_bound)},
                {"horizon_free_bound", number_json(b.horizon_free_bound)},
                {"concentrability_bound", number_json(b.concentrability_bound)},
                {"env_norm_bound", number_json(b.env_norm_bound)},
                {"af_gap", number_json(b.af_gap)},
                {"lower_bound", number_json(b.lower_bound_value)},
                {"zeta", number_json(b.zeta)},
                {"xi", number_json(b.xi)},
                {"trajectory_reward_cap", number_json(b.trajectory_reward_cap)},
                {"q_star_per_h", q},
                {"d_m", number_json(b.d_m)},
                {"dbar_m", number_json(b.dbar_m)},
                {"c_star", number_json(b.c_star)},
                {"v_star", number_json(b.v_star)}};
}

std::string per_cell_csv(const SATable& per_cell) {
    std::string out = "h,s,a,value\n";
    for (int h = 0; h < per_cell.steps(); ++h)
        for (int s = 0; s < per_cell.states(); ++s)
            for (int a = 0; a < per_cell.actions(); ++a)
                out += std::to_string(h) + ',' + std::to_string(s) + ',' + std::to_string(a) + ',' +
                       format_double(per_cell(h, s, a)) + '\n';
    return out;
}

Json to_json(const PlannerOutput& out) {
    Json j{{"policy", to_json(out.policy)},
           {"v_hat", table_json(out.v_hat)},
           {"q_bar", table_json(out.q_bar)},
           {"bonus", table_json(out.bonus)}};
    if (!out.absorbing_value.empty()) {
        Json a = Json::array();
        for (double x : out.absorbing_value) a.push_back(number_json(x));
        j["absorbing_value"] = a;
    }
    return j;
}

Json to_json(const OpeResult& r) {
    Json j{{"v_hat", number_json(r.v_hat)},
           {"v_hat_raw", number_json(r.v_hat_raw)},
           {"d_hat_pi", table_json(r.d_hat_pi)},
           {"d_hat_mu", table_json(r.d_hat_mu)},
           {"r_hat_pi", table_json(r.r_hat_pi)}};
    if (r.tau_s) j["tau_s"] = number_json(*r.tau_s);
    if (r.tau_a) j["tau_a"] = number_json(*r.tau_a);
    return j;
}

Json to_json(const SweepConfig& cfg) {
    Json params = Json::object();
    for (const auto& [k, v] : cfg.instance.params) params[k] = number_json(v);
    Json instance{{"family", cfg.instance.family}, {"params", params}};
    if (!cfg.instance.path.empty()) instance["path"] = cfg.instance.path;
    Json behavior{{"kind", cfg.behavior.kind}, {"epsilon", cfg.behavior.epsilon}};
    if (!cfg.behavior.path.empty()) behavior["path"] = cfg.behavior.path;
    return Json{{"instance", instance},
                {"behavior", behavior},
                {"algorithms", cfg.algorithms},
                {"n_grid", cfg.n_grid},
                {"num_seeds", cfg.num_seeds},
                {"delta", cfg.delta},
                {"constants", cfg.constants},
                {"planner",
                 {{"c_vpvi", cfg.planner.c_vpvi},
                  {"c1", cfg.planner.c1},
                  {"c2", cfg.planner.c2},
                  {"clip_enabled", cfg.planner.clip_enabled}}},
                {"parallelism", cfg.parallelism},
                {"record_wall_time", cfg.record_wall_time}};
}

SweepConfig sweep_config_from_json(const Json& j, const std::string& source) {
    Reader rd(source);
    rd.only_keys(j,
                 {"instance", "behavior", "algorithms", "n_grid", "num_seeds", "delta", "constants", "planner",
                  "parallelism", "record_wall_time"},
                 "");
    SweepConfig cfg;
    const Json& inst = rd.field(j, "instance", "");
    rd.only_keys(inst, {"family", "params", "path"}, "/instance");
    cfg.instance.family = rd.string(rd.field(inst, "family", "/instance"), "/instance/family");
    if (inst.contains("params")) {
        const Json& params = inst["params"];
        if (!params.is_object()) rd.fail("/instance/params", "expected an object");
        for (const auto& [k, v] : params.items()) cfg.instance.params[k] = rd.number(v, "/instance/params/" + k);
    }
    if (inst.contains("path")) cfg.instance.path = rd.string(inst["path"], "/instance/path");

    if (j.contains("behavior")) {
        const Json& b = j["behavior"];
        rd.only_keys(b, {"kind", "epsilon", "path"}, "/behavior");
        cfg.behavior.kind = rd.string(rd.field(b, "kind", "/behavior"), "/behavior/kind");
        if (b.contains("epsilon")) cfg.behavior.epsilon = rd.number(b["epsilon"], "/behavior/epsilon");
        if (b.contains("path")) cfg.behavior.path = rd.string(b["path"], "/behavior/path");
    }
    if (j.contains("algorithms")) {
        const Json& algs = j["algorithms"];
        if (!algs.is_array()) rd.fail("/algorithms", "expected an array");
        cfg.algorithms.clear();
        for (std::size_t i = 0; i < algs.size(); ++i)
            cfg.algorithms.push_back(rd.string(algs[i], "/algorithms/" + std::to_string(i)));
    }
    const Json& grid = rd.field(j, "n_grid", "");
    if (!grid.is_array()) rd.fail("/n_grid", "expected an array");
    for (std::size_t i = 0; i < grid.size(); ++i) cfg.n_grid.push_back(rd.integer(grid[i], "/n_grid/" + std::to_string(i)));
    if (j.contains("num_seeds")) cfg.num_seeds = rd.positive(j["num_seeds"], "/num_seeds");
    if (j.contains("delta")) cfg.delta = rd.number(j["delta"], "/delta");
    if (j.contains("constants")) cfg.constants = rd.string(j["constants"], "/constants");
    if (j.contains("planner")) {
        const Json& p = j["planner"];
        rd.only_keys(p, {"c_vpvi", "c1", "c2", "clip_enabled"}, "/planner");
        if (p.contains("c_vpvi")) cfg.planner.c_vpvi = rd.number(p["c_vpvi"], "/planner/c_vpvi");
        if (p.contains("c1")) cfg.planner.c1 = rd.number(p["c1"], "/planner/c1");
        if (p.contains("c2")) cfg.planner.c2 = rd.number(p["c2"], "/planner/c2");
        if (p.contains("clip_enabled")) cfg.planner.clip_enabled = rd.boolean(p["clip_enabled"], "/planner/clip_enabled");
    }
    if (j.contains("parallelism")) cfg.parallelism = rd.positive(j["parallelism"], "/parallelism");
    if (j.contains("record_wall_time")) cfg.record_wall_time = rd.boolean(j["record_wall_time"], "/record_wall_time");
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        rd.fail("", e.what());
    }
    return cfg;
}

namespace {

Json fit_json(const RateFit& f) {
    return Json{{"slope", number_json(f.slope)},
                {"intercept", number_json(f.intercept)},
                {"r_squared", number_json(f.r_squared)},
                {"points_used", f.points_used},
                {"warnings", f.warnings}};
}

}  // namespace

Json to_json(const SweepResult& r) {
    Json rows = Json::array();
    for (const auto& row : r.rows)
        rows.push_back(Json{{"algorithm", row.algorithm},
                            {"n", row.n},
                            {"seed_index", row.seed_index},
                            {"trial_seed", row.trial_seed},
                            {"v_star", number_json(row.v_star)},
                            {"v_pihat", number_json(row.v_pihat)},
                            {"gap", number_json(row.gap)},
                            {"v_hat_pessimistic", number_json(row.v_hat_pessimistic)},
                            {"pessimism_holds", row.pessimism_holds},
                            {"bound_main", number_json(row.bound_main)},
                            {"apvi_bound", number_json(row.apvi_bound)},
                            {"vpvi_bound", number_json(row.vpvi_bound)},
                            {"uniform_bound", number_json(row.uniform_bound)},
                            {"concentrability_bound", number_json(row.concentrability_bound)},
                            {"horizon_free_bound", number_json(row.horizon_free_bound)},
                            {"af_gap", number_json(row.af_gap)},
                            {"wall_time", number_json(row.wall_time)}});
    Json slopes = Json::object();
    for (const auto& [alg, fit] : r.slopes) slopes[alg] = fit_json(fit);
    return Json{{"rows", rows}, {"slopes", slopes}, {"notes", r.notes}};
}

SweepResult sweep_result_from_json(const Json& j, const std::string& source) {
    Reader rd(source);
    rd.only_keys(j, {"rows", "slopes", "notes"}, "");
    SweepResult r;
    const Json& rows = rd.field(j, "rows", "");
    if (!rows.is_array()) rd.fail("/rows", "expected an array");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string p = "/rows/" + std::to_string(i);
        const Json& x = rows[i];
        auto num = [&](const char* key) { return rd.number(rd.field(x, key, p), p + "/" + key); };
        SweepRow row;
        row.algorithm = rd.string(rd.field(x, "algorithm", p), p + "/algorithm");
        row.n = rd.integer(rd.field(x, "n", p), p + "/n");
        row.seed_index = static_cast<int>(rd.integer(rd.field(x, "seed_index", p), p + "/seed_index"));
        row.trial_seed = rd.unsigned_integer(rd.field(x, "trial_seed", p), p + "/trial_seed");
        row.v_star = num("v_star");
        row.v_pihat = num("v_pihat");
        row.gap = num("gap");
        row.v_hat_pessimistic = num("v_hat_pessimistic");
        row.pessimism_holds = rd.boolean(rd.field(x, "pessimism_holds", p), p + "/pessimism_holds");
        row.bound_main = num("bound_main");
        row.apvi_bound = num("apvi_bound");
        row.vpvi_bound = num("vpvi_bound");
        row.uniform_bound = num("uniform_bound");
        row.concentrability_bound = num("concentrability_bound");
        row.horizon_free_bound = num("horizon_free_bound");
        row.af_gap = num("af_gap");
        row.wall_time = num("wall_time");
        r.rows.push_back(std::move(row));
    }
    if (j.contains("slopes")) {
        for (const auto& [alg, f] : j["slopes"].items()) {
            const std::string p = "/slopes/" + alg;
            RateFit fit;
            fit.slope = rd.number(rd.field(f, "slope", p), p + "/slope");
            fit.intercept = rd.number(rd.field(f, "intercept", p), p + "/intercept");
            fit.r_squared = rd.number(rd.field(f, "r_squared", p), p + "/r_squared");
            fit.points_used = static_cast<int>(rd.integer(rd.field(f, "points_used", p), p + "/points_used"));
            if (f.contains("warnings"))
                for (const auto& w : f["warnings"]) fit.warnings.push_back(rd.string(w, p + "/warnings"));
            r.slopes[alg] = std::move(fit);
        }
    }
    if (j.contains("notes"))
        for (const auto& [alg, note] : j["notes"].items()) r.notes[alg] = rd.string(note, "/notes/" + alg);
    return r;
}

std::string sweep_rows_csv(const SweepResult& r) {
    std::string out =
        "algorithm,n,seed_index,trial_seed,v_star,v_pihat,gap,v_hat_pessimistic,pessimism_holds,bound_main,"
        "apvi_bound,vpvi_bound,uniform_bound,concentrability_bound,horizon_free_bound,af_gap,wall_time\n";
    for (const auto& row : r.rows) {
        out += row.algorithm + ',' + std::to_string(row.n) + ',' + std::to_string(row.seed_index) + ',' +
               std::to_string(row.trial_seed);
        for (double x : {row.v_star, row.v_pihat, row.gap, row.v_hat_pessimistic}) out += ',' + format_double(x);
        out += row.pessimism_holds ? ",1" : ",0";
        for (double x : {row.bound_main, row.apvi_bound, row.vpvi_bound, row.uniform_bound, row.concentrability_bound,
                         row.horizon_free_bound, row.af_gap, row.wall_time})
            out += ',' + format_double(x);
        out += '\n';
    }
    return out;
}

}  // namespace offrl
