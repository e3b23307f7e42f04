#include "idxf/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "idxf/csv.hpp"
#include "idxf/selection.hpp"

namespace idxf::pipeline {

namespace fs = std::filesystem;

std::string_view to_string(Command c)
{
    switch (c) {
    case Command::select: return "select";
    case Command::allocate: return "allocate";
    case Command::build_index: return "build-index";
    case Command::make_dataset: return "make-dataset";
    case Command::run_experiment: return "run-experiment";
    case Command::report: return "report";
    }
    return "?";
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what)
{
    throw ValidationError(fmt::format("config: {}: {}", where, what));
}

void allow_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> keys)
{
    if (!node)
        return;
    if (!node.IsMap())
        fail(where, "expected a mapping");
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.contains(key)) {
            std::string list;
            for (const auto& k : ok)
                list += (list.empty() ? "" : ", ") + k;
            fail(where, fmt::format("unknown key '{}' (expected one of: {})", key, list));
        }
    }
}

template <typename T>
T scalar(const YAML::Node& parent, const char* key, const std::string& where, T fallback)
{
    const auto node = parent[key];
    if (!node)
        return fallback;
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        fail(where + "." + key, "wrong type '" + YAML::Dump(node) + "'");
    }
}

template <typename E>
E choice(const YAML::Node& parent, const char* key, const std::string& where, E fallback,
         std::initializer_list<std::pair<const char*, E>> options)
{
    const auto node = parent[key];
    if (!node)
        return fallback;
    const auto text = scalar<std::string>(parent, key, where, "");
    std::string names;
    for (const auto& [name, value] : options) {
        if (text == name)
            return value;
        names += (names.empty() ? "" : ", ") + std::string(name);
    }
    fail(where + "." + key, fmt::format("'{}' is not one of: {}", text, names));
}

fs::path resolve(const fs::path& base, const std::string& p)
{
    const fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::vector<std::pair<std::string, fs::path>> path_map(const YAML::Node& node, const std::string& where,
                                                       const fs::path& base)
{
    std::vector<std::pair<std::string, fs::path>> out;
    if (!node)
        return out;
    if (node.IsMap()) {
        for (const auto& kv : node)
            out.emplace_back(kv.first.as<std::string>(), resolve(base, kv.second.as<std::string>()));
    } else if (node.IsSequence()) {
        // [{name: X, path: p}, ...] keeps an explicit order
        for (const auto& item : node) {
            allow_keys(item, where + "[]", {"name", "path"});
            if (!item["name"] || !item["path"])
                fail(where, "each entry needs 'name' and 'path'");
            out.emplace_back(item["name"].as<std::string>(), resolve(base, item["path"].as<std::string>()));
        }
    } else {
        fail(where, "expected a mapping of name -> path or a list of {name, path}");
    }
    std::set<std::string> seen;
    for (const auto& [name, _] : out)
        if (!seen.insert(name).second)
            fail(where, "duplicate name '" + name + "'");
    return out;
}

std::optional<fs::path> opt_path(const YAML::Node& parent, const char* key, const std::string& where,
                                 const fs::path& base)
{
    if (!parent[key])
        return std::nullopt;
    return resolve(base, scalar<std::string>(parent, key, where, ""));
}

void check_positive(double v, const std::string& where)
{
    if (!(v > 0.0) || !std::isfinite(v))
        fail(where, fmt::format("must be positive, got {}", v));
}

void require_file(const fs::path& p, const std::string& what)
{
    std::error_code ec;
    if (!fs::is_regular_file(p, ec))
        throw ValidationError(fmt::format("{} not found: {}", what, p.string()));
}

} // namespace

PipelineConfig parse_config(const std::string& yaml_text, const fs::path& base_dir, const Overrides& overrides)
{
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ValidationError(fmt::format("config: YAML syntax error at line {}: {}", e.mark.line + 1, e.msg));
    }
    if (root.IsNull())
        root = YAML::Node(YAML::NodeType::Map);
    allow_keys(root, "<root>",
               {"seed", "output_dir", "data", "selection", "risk", "allocation", "index", "dataset", "training"});

    PipelineConfig cfg;
    cfg.seed = scalar<std::uint64_t>(root, "seed", "<root>", 42);
    cfg.output_dir = resolve(base_dir, scalar<std::string>(root, "output_dir", "<root>", "idxf-out"));

    const auto data = root["data"];
    allow_keys(data, "data", {"prices", "csv_schema", "price_field", "return_mode", "market", "metrics", "factors", "index"});
    if (data) {
        cfg.data.prices = path_map(data["prices"], "data.prices", base_dir);
        std::sort(cfg.data.prices.begin(), cfg.data.prices.end());
        const auto schema = data["csv_schema"];
        allow_keys(schema, "data.csv_schema", {"date", "close", "adjusted_close", "dividend"});
        if (schema) {
            auto& s = cfg.data.schema;
            s.date = scalar<std::string>(schema, "date", "data.csv_schema", s.date);
            s.close = scalar<std::string>(schema, "close", "data.csv_schema", s.close);
            s.adjusted_close = scalar<std::string>(schema, "adjusted_close", "data.csv_schema", s.adjusted_close);
            s.dividend = scalar<std::string>(schema, "dividend", "data.csv_schema", s.dividend);
        }
        cfg.data.price_field = choice(data, "price_field", "data", PriceField::adjusted_close,
                                      {{"adjusted_close", PriceField::adjusted_close}, {"close", PriceField::close}});
        cfg.data.return_mode = choice(data, "return_mode", "data", ReturnMode::simple_with_dividends,
                                      {{"simple_with_dividends", ReturnMode::simple_with_dividends},
                                       {"simple_price_only", ReturnMode::simple_price_only}});
        cfg.data.market = opt_path(data, "market", "data", base_dir);
        cfg.data.metrics = opt_path(data, "metrics", "data", base_dir);
        cfg.data.factors = path_map(data["factors"], "data.factors", base_dir);
        cfg.data.index = opt_path(data, "index", "data", base_dir);
    }

    const auto sel = root["selection"];
    allow_keys(sel, "selection", {"weights", "top_k"});
    if (sel) {
        if (const auto w = sel["weights"]) {
            if (!w.IsSequence() || w.size() != 6)
                fail("selection.weights", "expected a list of 6 numbers");
            for (std::size_t i = 0; i < 6; ++i)
                cfg.selection.weights[i] = w[i].as<double>();
        }
        const auto k = scalar<long long>(sel, "top_k", "selection", 8);
        if (k < 1)
            fail("selection.top_k", "must be at least 1");
        cfg.selection.top_k = static_cast<std::size_t>(k);
    }
    try {
        SelectionWeights{cfg.selection.weights};
    } catch (const std::invalid_argument& e) {
        fail("selection.weights", e.what());
    }

    const auto risk = root["risk"];
    allow_keys(risk, "risk", {"linkage", "distance", "align", "clusters"});
    if (risk) {
        cfg.risk.linkage = choice(risk, "linkage", "risk", LinkageMethod::single,
                                  {{"single", LinkageMethod::single},
                                   {"complete", LinkageMethod::complete},
                                   {"ward", LinkageMethod::ward}});
        cfg.risk.distance = choice(risk, "distance", "risk", DistanceConvention::correlation,
                                   {{"correlation", DistanceConvention::correlation},
                                    {"euclidean", DistanceConvention::euclidean}});
        cfg.risk.align = choice(risk, "align", "risk", AlignPolicy::intersect,
                                {{"intersect", AlignPolicy::intersect}, {"forward_fill", AlignPolicy::forward_fill}});
        cfg.risk.clusters = scalar<int>(risk, "clusters", "risk", 0);
        if (cfg.risk.clusters < 0)
            fail("risk.clusters", "must be nonnegative");
    }

    const auto alloc = root["allocation"];
    allow_keys(alloc, "allocation", {"strategy", "universe"});
    if (alloc) {
        if (alloc["strategy"]) {
            try {
                cfg.allocation.strategy = parse_strategy(scalar<std::string>(alloc, "strategy", "allocation", ""));
            } catch (const std::invalid_argument& e) {
                fail("allocation.strategy", e.what());
            }
        }
        if (const auto u = alloc["universe"]) {
            if (u.IsSequence()) {
                cfg.allocation.universe = "list";
                for (const auto& t : u)
                    cfg.allocation.constituents.push_back(t.as<std::string>());
                if (cfg.allocation.constituents.empty())
                    fail("allocation.universe", "empty ticker list");
            } else {
                cfg.allocation.universe = scalar<std::string>(alloc, "universe", "allocation", "all");
                if (cfg.allocation.universe != "all" && cfg.allocation.universe != "selected")
                    fail("allocation.universe", "expected 'all', 'selected' or a list of tickers");
            }
        }
    }

    const auto index = root["index"];
    allow_keys(index, "index", {"weights"});
    if (index && index["weights"]) {
        const auto w = scalar<std::string>(index, "weights", "index", "allocated");
        if (w == "allocated" || w == "published") {
            cfg.index.weights = w;
        } else {
            cfg.index.weights = "file";
            cfg.index.weights_path = resolve(base_dir, w);
        }
    }

    const auto ds = root["dataset"];
    allow_keys(ds, "dataset", {"lookback", "train_fraction", "factor_mode"});
    if (ds) {
        const auto lb = scalar<long long>(ds, "lookback", "dataset", 20);
        if (lb < 1)
            fail("dataset.lookback", "must be at least 1");
        cfg.dataset.lookback = static_cast<std::size_t>(lb);
        cfg.dataset.train_fraction = scalar<double>(ds, "train_fraction", "dataset", 0.8);
        if (!(cfg.dataset.train_fraction > 0.0 && cfg.dataset.train_fraction < 1.0))
            fail("dataset.train_fraction", "must lie strictly between 0 and 1");
        cfg.dataset.factor_mode = choice(ds, "factor_mode", "dataset", FactorMode::returns,
                                         {{"returns", FactorMode::returns}, {"levels", FactorMode::levels}});
    }

    const auto tr = root["training"];
    allow_keys(tr, "training", {"epochs", "runs", "learning_rate", "batch_size", "hidden", "kernels", "beta1", "beta2",
                                "epsilon", "max_parallelism"});
    if (tr) {
        auto& t = cfg.training;
        t.epochs = scalar<int>(tr, "epochs", "training", t.epochs);
        t.runs = scalar<int>(tr, "runs", "training", t.runs);
        t.learning_rate = scalar<double>(tr, "learning_rate", "training", t.learning_rate);
        t.batch_size = scalar<int>(tr, "batch_size", "training", t.batch_size);
        t.hidden = scalar<int>(tr, "hidden", "training", t.hidden);
        t.kernels = scalar<int>(tr, "kernels", "training", t.kernels);
        t.beta1 = scalar<double>(tr, "beta1", "training", t.beta1);
        t.beta2 = scalar<double>(tr, "beta2", "training", t.beta2);
        t.epsilon = scalar<double>(tr, "epsilon", "training", t.epsilon);
        t.max_parallelism = scalar<int>(tr, "max_parallelism", "training", t.max_parallelism);
    }

    if (overrides.seed)
        cfg.seed = *overrides.seed;
    if (overrides.output_dir)
        cfg.output_dir = fs::absolute(*overrides.output_dir).lexically_normal();
    cfg.training.seed = cfg.seed;
    try {
        cfg.training.validate();
    } catch (const std::invalid_argument& e) {
        fail("training", e.what());
    }
    check_positive(cfg.training.learning_rate, "training.learning_rate");
    ModelShape probe;
    probe.arch = Architecture::cnn_lstm;
    probe.kernels = cfg.training.kernels;
    if (cfg.dataset.lookback < static_cast<std::size_t>(probe.kernel_width + probe.pool - 1))
        fail("dataset.lookback", fmt::format("must be at least {} for the convolutional model",
                                             probe.kernel_width + probe.pool - 1));
    return cfg;
}

PipelineConfig load_config(const fs::path& path, const Overrides& overrides)
{
    std::error_code ec;
    if (!fs::is_regular_file(path, ec))
        throw ValidationError("config file not found: " + path.string());
    std::string text;
    try {
        text = csv::read_file(path);
    } catch (const std::exception& e) {
        throw ValidationError(e.what());
    }
    auto cfg = parse_config(text, fs::absolute(path).parent_path(), overrides);
    cfg.source = path;
    return cfg;
}

Overrides merge_environment(Overrides cli)
{
    if (!cli.seed) {
        if (const char* s = std::getenv("IDXF_SEED"); s && *s) {
            std::uint64_t v = 0;
            const std::string_view text(s);
            const auto [ptr, err] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (err != std::errc{} || ptr != text.data() + text.size())
                throw ValidationError(fmt::format("IDXF_SEED is not an unsigned integer: '{}'", text));
            cli.seed = v;
        }
    }
    if (!cli.output_dir)
        if (const char* o = std::getenv("IDXF_OUTPUT_DIR"); o && *o)
            cli.output_dir = fs::path(o);
    return cli;
}

void validate_inputs(const PipelineConfig& cfg, Command command)
{
    const auto& d = cfg.data;
    auto need_prices = [&] {
        if (d.prices.empty())
            throw ValidationError("config: data.prices is empty");
        for (const auto& [t, p] : d.prices)
            require_file(p, "price file for " + t);
    };
    auto need_factors = [&] {
        if (d.factors.empty())
            throw ValidationError("config: data.factors is empty; Dataset 2 needs at least one factor series");
        for (const auto& [n, p] : d.factors)
            require_file(p, "factor file for " + n);
    };
    switch (command) {
    case Command::select:
        need_prices();
        if (!d.metrics)
            throw ValidationError("config: data.metrics is required for select");
        require_file(*d.metrics, "metrics file");
        if (d.market)
            require_file(*d.market, "market price file");
        if (cfg.selection.top_k > d.prices.size())
            throw ValidationError(fmt::format("config: selection.top_k = {} exceeds the universe of {} companies",
                                              cfg.selection.top_k, d.prices.size()));
        break;
    case Command::allocate:
        need_prices();
        if (cfg.allocation.universe == "selected")
            require_file(cfg.output("selection.csv"), "selection output (run `select` first)");
        for (const auto& t : cfg.allocation.constituents)
            if (std::none_of(d.prices.begin(), d.prices.end(), [&](const auto& kv) { return kv.first == t; }))
                throw ValidationError("config: allocation.universe lists '" + t + "' which has no price file");
        break;
    case Command::build_index:
        need_prices();
        if (cfg.index.weights == "allocated")
            require_file(cfg.output("weights.csv"), "allocation output (run `allocate` first)");
        else if (cfg.index.weights == "file")
            require_file(*cfg.index.weights_path, "index weights file");
        break;
    case Command::make_dataset:
    case Command::run_experiment:
        require_file(cfg.index_path(), "index series (run `build-index` first or set data.index)");
        need_factors();
        break;
    case Command::report:
        require_file(cfg.output("report.txt"), "experiment report (run `run-experiment` first)");
        break;
    }
}

} // namespace idxf::pipeline
