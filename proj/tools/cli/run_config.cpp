#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "advx/dataio.hpp"
#include "advx/digest.hpp"
#include "advx/error.hpp"

namespace advx::cli {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        if (comma == std::string_view::npos) comma = s.size();
        auto item = trim(s.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        start = comma + 1;
    }
    return out;
}

// Lists are stored without blanks around commas so cosmetic edits keep the fingerprint.
std::string canonical_value(std::string_view raw) {
    auto items = split_list(raw);
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
    return out;
}

const std::map<std::string, std::set<std::string>>& fixed_sections() {
    static const std::map<std::string, std::set<std::string>> sections = {
        {"data", {"train_images", "train_labels", "test_images", "test_labels", "classes"}},
        {"train", {"learning_rate", "batch_size", "epochs", "target_accuracy"}},
        {"models", {"names"}},
        {"subset", {"size", "min_per_class"}},
        {"attack",
         {"methods", "delta", "epsilon", "alpha", "iterations", "decay", "termination", "clamp_lo", "clamp_hi"}},
        {"run", {"seed", "jobs", "out"}},
    };
    return sections;
}

const std::set<std::string> sweep_names = {"perturbation", "iterations", "decay"};

void check_key(const std::string& section, const std::string& key) {
    if (auto it = fixed_sections().find(section); it != fixed_sections().end()) {
        if (!it->second.contains(key)) throw InvalidArgument("unknown key '" + key + "' in [" + section + "]");
        return;
    }
    if (section.starts_with("model:")) {
        if (key != "architecture" && key != "layers" && key != "seed")
            throw InvalidArgument("unknown key '" + key + "' in [" + section + "]");
        return;
    }
    if (section.starts_with("sweep:")) {
        if (!sweep_names.contains(section.substr(6))) throw InvalidArgument("unknown sweep [" + section + "]");
        if (key != "values" && key != "methods")
            throw InvalidArgument("unknown key '" + key + "' in [" + section + "]");
        return;
    }
    throw InvalidArgument("unknown section [" + section + "]");
}

class Entries {
public:
    explicit Entries(const std::map<std::string, std::string>& e) : e_(e) {}

    bool has(const std::string& key) const { return e_.contains(key); }

    const std::string& str(const std::string& key) const {
        auto it = e_.find(key);
        if (it == e_.end() || it->second.empty()) throw InvalidArgument("missing config value " + key);
        return it->second;
    }

    double real(const std::string& key) const { return to_real(key, str(key)); }

    std::uint64_t whole(const std::string& key) const { return to_whole(key, str(key)); }

    std::vector<double> reals(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : split_list(str(key))) out.push_back(to_real(key, item));
        return out;
    }

    std::vector<Method> methods(const std::string& key) const {
        std::vector<Method> out;
        for (const auto& item : split_list(str(key))) out.push_back(parse_method(item));
        if (out.empty()) throw InvalidArgument(key + " lists no methods");
        return out;
    }

private:
    static double to_real(const std::string& key, const std::string& text) {
        double v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || p != text.data() + text.size())
            throw InvalidArgument(key + ": '" + text + "' is not a number");
        return v;
    }

    static std::uint64_t to_whole(const std::string& key, const std::string& text) {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || p != text.data() + text.size())
            throw InvalidArgument(key + ": '" + text + "' is not a non-negative integer");
        return v;
    }

    const std::map<std::string, std::string>& e_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::string digest_of(const std::map<std::string, std::string>& entries,
                      const std::function<bool(const std::string&)>& keep) {
    std::string text;
    for (const auto& [k, v] : entries)
        if (keep(k)) text += k + "=" + v + "\n";
    return short_digest(text);
}

}  // namespace

std::string RunConfig::canonical_text() const {
    std::string text;
    for (const auto& [k, v] : entries)
        if (k != "run.jobs" && k != "run.out") text += k + "=" + v + "\n";
    return text;
}

std::string RunConfig::fingerprint() const { return short_digest(canonical_text()); }

std::string RunConfig::suite_fingerprint() const {
    return digest_of(entries, [](const std::string& k) {
        return k.starts_with("data.") || k.starts_with("train.") || k.starts_with("models.") ||
               k.starts_with("model:");
    });
}

const SweepDef& RunConfig::sweep(const std::string& which) const {
    auto it = sweeps.find(which);
    if (it == sweeps.end()) throw InvalidArgument("config has no [sweep:" + which + "] section");
    return it->second;
}

const ModelEntry& RunConfig::model(const std::string& name) const {
    for (const auto& m : models)
        if (m.name == name) return m;
    throw InvalidArgument("config has no model named '" + name + "'");
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::vector<std::string>& overrides) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }

    RunConfig cfg;
    cfg.base_dir = base_dir;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw InvalidArgument("config: top-level key '" + section + "' outside a section");
        for (const auto& [key, value] : body) {
            check_key(section, key);
            cfg.entries[section + "." + key] = canonical_value(value.data());
        }
    }
    for (const auto& o : overrides) {
        auto eq = o.find('=');
        auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw InvalidArgument("override '" + o + "' is not section.key=value");
        auto section = trim(std::string_view(o).substr(0, dot));
        auto key = trim(std::string_view(o).substr(dot + 1, eq - dot - 1));
        check_key(section, key);
        cfg.entries[section + "." + key] = canonical_value(std::string_view(o).substr(eq + 1));
    }

    Entries e(cfg.entries);
    cfg.train_images = resolve(base_dir, e.str("data.train_images"));
    cfg.train_labels = resolve(base_dir, e.str("data.train_labels"));
    cfg.test_images = resolve(base_dir, e.str("data.test_images"));
    cfg.test_labels = resolve(base_dir, e.str("data.test_labels"));
    if (e.has("data.classes")) cfg.classes = e.whole("data.classes");

    cfg.train.learning_rate = e.real("train.learning_rate");
    cfg.train.batch_size = e.whole("train.batch_size");
    cfg.train.epochs = e.whole("train.epochs");
    if (e.has("train.target_accuracy")) cfg.train.target_accuracy = e.real("train.target_accuracy");
    if (!(cfg.train.learning_rate > 0) || cfg.train.batch_size == 0)
        throw InvalidArgument("train.learning_rate and train.batch_size must be positive");

    std::set<std::string> seen;
    for (const auto& name : split_list(e.str("models.names"))) {
        if (!seen.insert(name).second) throw InvalidArgument("model '" + name + "' listed twice");
        const std::string sec = "model:" + name + ".";
        ModelEntry m;
        m.name = name;
        if (e.has(sec + "layers")) {
            m.spec.input_shape = {1, 28, 28};
            m.spec.classes = cfg.classes;
            m.spec.layers = parse_layers(e.str(sec + "layers"));
        } else {
            m.spec = architecture(e.has(sec + "architecture") ? e.str(sec + "architecture") : name);
        }
        m.spec.layer_shapes();
        m.seed = e.whole(sec + "seed");
        cfg.models.push_back(std::move(m));
    }
    if (cfg.models.empty()) throw InvalidArgument("models.names is empty");
    for (const auto& [k, v] : cfg.entries)
        if (k.starts_with("model:") && !seen.contains(k.substr(6, k.find('.') - 6)))
            throw InvalidArgument("section [" + k.substr(0, k.find('.')) + "] is not listed in models.names");

    cfg.subset_size = e.whole("subset.size");
    if (e.has("subset.min_per_class")) cfg.min_per_class = e.whole("subset.min_per_class");

    cfg.methods = e.methods("attack.methods");
    auto& a = cfg.attack;
    a.method = cfg.methods.front();
    if (e.has("attack.delta")) a.delta = e.real("attack.delta");
    if (e.has("attack.epsilon")) a.epsilon = e.real("attack.epsilon");
    if (e.has("attack.alpha")) a.alpha = e.real("attack.alpha");
    a.max_iterations = e.whole("attack.iterations");
    if (e.has("attack.decay")) a.decay = e.real("attack.decay");
    if (e.has("attack.termination")) a.termination = parse_termination(e.str("attack.termination"));
    if (e.has("attack.clamp_lo")) a.clamp_lo = e.real("attack.clamp_lo");
    if (e.has("attack.clamp_hi")) a.clamp_hi = e.real("attack.clamp_hi");
    for (auto m : cfg.methods) {
        auto c = a;
        c.method = m;
        c.validate();
    }

    for (const auto& which : sweep_names) {
        const std::string sec = "sweep:" + which + ".";
        if (!e.has(sec + "values")) continue;
        SweepDef s;
        s.values = e.reals(sec + "values");
        if (e.has(sec + "methods")) {
            s.methods = e.methods(sec + "methods");
        } else if (which == "decay") {
            for (auto m : cfg.methods)
                if (uses_momentum(m)) s.methods.push_back(m);
        } else {
            s.methods = cfg.methods;
        }
        cfg.sweeps[which] = std::move(s);
    }

    cfg.seed = e.whole("run.seed");
    if (e.has("run.jobs")) cfg.jobs = e.whole("run.jobs");
    if (cfg.jobs == 0) throw InvalidArgument("run.jobs must be at least 1");
    cfg.out = e.has("run.out") ? resolve(base_dir, e.str("run.out")) : std::filesystem::path("advx-out");
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError&) {
        throw InvalidArgument("cannot read config file " + path.string());
    }
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse_run_config(text, base, overrides);
}

}  // namespace advx::cli
