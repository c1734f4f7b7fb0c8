#include "cmmnl/data_io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cmmnl {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_double(const std::string& cell, const std::string& file, long row,
                    const std::string& column) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE ||
      !std::isfinite(v)) {
    std::ostringstream os;
    os << file << " row " << row << ": non-numeric value '" << cell << "' in column '"
       << column << "'";
    throw ValidationError(os.str());
  }
  return v;
}

std::int64_t parse_int(const std::string& cell, const std::string& file, long row,
                       const std::string& column) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(cell.c_str(), &end, 10);
  if (cell.empty() || end != cell.c_str() + cell.size() || errno == ERANGE) {
    std::ostringstream os;
    os << file << " row " << row << ": non-integer value '" << cell << "' in column '"
       << column << "'";
    throw ValidationError(os.str());
  }
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // row i is file row i+2
  std::unordered_map<std::string, std::size_t> index;

  std::size_t column(const std::string& name, const std::string& file) const {
    auto it = index.find(name);
    if (it == index.end())
      throw ValidationError(file + ": missing required column '" + name + "'");
    return it->second;
  }
};

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open file: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw ValidationError(path + ": empty file");
  t.header = split_csv_line(line);
  for (std::size_t i = 0; i < t.header.size(); ++i) t.index[t.header[i]] = i;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size()) {
      std::ostringstream os;
      os << path << " row " << t.rows.size() + 2 << ": expected " << t.header.size()
         << " cells, found " << cells.size();
      throw ValidationError(os.str());
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

std::string format_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

Vec json_to_vec_or_scalar(const json& j, Eigen::Index n, const char* what) {
  if (j.is_number()) return Vec::Constant(n, j.get<double>());
  if (j.is_array()) {
    if (static_cast<Eigen::Index>(j.size()) != n)
      throw ValidationError(std::string("prior '") + what + "' has wrong length");
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
  }
  throw ValidationError(std::string("prior '") + what + "' must be a number or array");
}

}  // namespace

void ModelConfig::validate() const {
  std::unordered_set<std::string> names;
  for (const auto& a : attributes) {
    if (!names.insert(a.column).second)
      throw ValidationError("config: attribute column '" + a.column + "' declared twice");
  }
  for (const auto& a : ascs) {
    if (!names.insert(a.name).second)
      throw ValidationError("config: ASC name '" + a.name + "' collides with another column");
  }
  if (!path_size_column.empty() && names.count(path_size_column))
    throw ValidationError("config: path-size column also declared as an attribute");
  std::unordered_set<std::string> ctx;
  for (const auto& c : context) {
    if (!ctx.insert(c.column).second)
      throw ValidationError("config: context column '" + c.column + "' declared twice");
  }
  for (const auto& it : interactions) {
    if (!names.count(it.attribute))
      throw ValidationError("config: interaction references unknown attribute '" +
                            it.attribute + "'");
    if (!ctx.count(it.context))
      throw ValidationError("config: interaction references unknown context '" + it.context +
                            "'");
  }
  if (attributes.empty() && ascs.empty())
    throw ValidationError("config: no attribute or ASC columns declared");
  if (model == ModelKind::cmmnl && context.empty())
    throw ValidationError("config: model 'cmmnl' requires context columns");
  if (model == ModelKind::mnl) {
    for (const auto& a : attributes)
      if (a.random)
        throw ValidationError("config: model 'mnl' cannot have random-coefficient columns");
  }
}

PriorConfig ModelConfig::resolve_priors(Eigen::Index L, Eigen::Index K) const {
  PriorConfig p = PriorConfig::defaults(L, K);
  const json& j = priors_json;
  if (!j.is_null() && !j.empty()) {
    if (j.contains("lambda0")) p.lambda0 = json_to_vec_or_scalar(j["lambda0"], L, "lambda0");
    if (j.contains("xi0")) p.xi0_diag = json_to_vec_or_scalar(j["xi0"], L, "xi0");
    if (j.contains("mu0")) p.mu0 = json_to_vec_or_scalar(j["mu0"], K, "mu0");
    if (j.contains("sigma0")) p.sigma0_diag = json_to_vec_or_scalar(j["sigma0"], K, "sigma0");
    if (j.contains("halfcauchy_scale")) p.halfcauchy_scale = j["halfcauchy_scale"].get<double>();
    if (j.contains("lkj_eta")) p.lkj_eta = j["lkj_eta"].get<double>();
    if (j.contains("sigma_c")) p.sigma_c = j["sigma_c"].get<double>();
  }
  p.validate(L, K);
  return p;
}

json ModelConfig::to_json() const {
  json j;
  j["model"] = model_kind_name(model);
  json atts = json::array();
  for (const auto& a : attributes)
    atts.push_back({{"column", a.column}, {"role", a.random ? "random" : "fixed"}});
  j["attributes"] = atts;
  json asc = json::array();
  for (const auto& a : ascs) asc.push_back({{"name", a.name}, {"alt", a.alt}});
  j["ascs"] = asc;
  if (!path_size_column.empty()) j["path_size_column"] = path_size_column;
  json ctx = json::array();
  for (const auto& c : context)
    ctx.push_back({{"column", c.column},
                   {"kind", c.kind == ContextKind::binary ? "binary" : "continuous"}});
  j["context"] = ctx;
  json inter = json::array();
  for (const auto& it : interactions)
    inter.push_back({{"attribute", it.attribute}, {"context", it.context}});
  j["interactions"] = inter;
  j["standardize"] = standardize;
  j["variable_choice_set"] = variable_choice_set;
  if (!priors_json.is_null()) j["priors"] = priors_json;
  json f;
  f["learning_rate"] = fit.learning_rate;
  if (fit.lr_decay_steps > 0.0) f["lr_decay_steps"] = fit.lr_decay_steps;
  if (fit.net_learning_rate >= 0.0) f["net_learning_rate"] = fit.net_learning_rate;
  f["batch_size"] = fit.batch_size;
  f["mc_samples"] = fit.mc_samples;
  f["max_steps"] = fit.max_steps;
  f["window"] = fit.window;
  f["patience"] = fit.patience;
  f["seed"] = fit.seed;
  f["collapse_mu"] = fit.collapse_mu;
  f["threads"] = fit.threads;
  f["init_scale"] = fit.init_scale;
  j["fit"] = f;
  json net;
  net["hidden"] = network.hidden;
  net["dropout"] = network.dropout;
  j["network"] = net;
  return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  if (j.contains("model")) c.model = model_kind_from_name(j["model"].get<std::string>());
  for (const auto& e : j.value("attributes", json::array())) {
    AttributeDecl a;
    a.column = e.at("column").get<std::string>();
    const std::string role = e.value("role", "fixed");
    if (role != "fixed" && role != "random")
      throw ValidationError("config: unknown attribute role '" + role + "'");
    a.random = role == "random";
    c.attributes.push_back(std::move(a));
  }
  for (const auto& e : j.value("ascs", json::array())) {
    AscDecl a;
    a.name = e.at("name").get<std::string>();
    a.alt = e.at("alt").get<std::int64_t>();
    c.ascs.push_back(std::move(a));
  }
  c.path_size_column = j.value("path_size_column", std::string());
  for (const auto& e : j.value("context", json::array())) {
    ContextDecl d;
    d.column = e.at("column").get<std::string>();
    const std::string kind = e.value("kind", "binary");
    if (kind != "binary" && kind != "continuous")
      throw ValidationError("config: unknown context kind '" + kind + "'");
    d.kind = kind == "binary" ? ContextKind::binary : ContextKind::continuous;
    c.context.push_back(std::move(d));
  }
  for (const auto& e : j.value("interactions", json::array())) {
    c.interactions.push_back({e.at("attribute").get<std::string>(),
                              e.at("context").get<std::string>()});
  }
  c.standardize = j.value("standardize", false);
  c.variable_choice_set = j.value("variable_choice_set", false);
  if (j.contains("priors")) c.priors_json = j["priors"];
  if (j.contains("fit")) {
    const json& f = j["fit"];
    c.fit.learning_rate = f.value("learning_rate", c.fit.learning_rate);
    c.fit.lr_decay_steps = f.value("lr_decay_steps", c.fit.lr_decay_steps);
    c.fit.net_learning_rate = f.value("net_learning_rate", c.fit.net_learning_rate);
    c.fit.batch_size = f.value("batch_size", c.fit.batch_size);
    c.fit.mc_samples = f.value("mc_samples", c.fit.mc_samples);
    c.fit.max_steps = f.value("max_steps", c.fit.max_steps);
    c.fit.window = f.value("window", c.fit.window);
    c.fit.patience = f.value("patience", c.fit.patience);
    c.fit.seed = f.value("seed", c.fit.seed);
    c.fit.collapse_mu = f.value("collapse_mu", c.fit.collapse_mu);
    c.fit.threads = f.value("threads", c.fit.threads);
    c.fit.init_scale = f.value("init_scale", c.fit.init_scale);
  }
  if (j.contains("network")) {
    const json& n = j["network"];
    if (n.contains("hidden")) {
      c.network.hidden.clear();
      for (const auto& h : n["hidden"]) c.network.hidden.push_back(h.get<Eigen::Index>());
    }
    c.network.dropout = n.value("dropout", c.network.dropout);
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

ChoiceDataset load_choice_csv(const std::string& choices_path,
                              const std::string& context_path, const ModelConfig& config) {
  config.validate();
  const CsvTable choices = read_csv(choices_path);

  // Context table keyed by occasion id.
  std::unordered_map<std::int64_t, Vec> context_by_occ;
  const Eigen::Index C = static_cast<Eigen::Index>(config.context.size());
  if (C > 0) {
    if (context_path.empty())
      throw ValidationError("config declares context columns but no context file was given");
    const CsvTable ctx = read_csv(context_path);
    const std::size_t occ_col = ctx.column("occasion_id", context_path);
    std::vector<std::size_t> ctx_cols;
    for (const auto& d : config.context) ctx_cols.push_back(ctx.column(d.column, context_path));
    for (std::size_t r = 0; r < ctx.rows.size(); ++r) {
      const long row_no = static_cast<long>(r) + 2;
      const std::int64_t occ_id =
          parse_int(ctx.rows[r][occ_col], context_path, row_no, "occasion_id");
      Vec v(C);
      for (Eigen::Index c = 0; c < C; ++c)
        v(c) = parse_double(ctx.rows[r][ctx_cols[static_cast<std::size_t>(c)]], context_path,
                            row_no, config.context[static_cast<std::size_t>(c)].column);
      if (!context_by_occ.emplace(occ_id, std::move(v)).second) {
        std::ostringstream os;
        os << context_path << " row " << row_no << ": duplicate occasion_id " << occ_id;
        throw ValidationError(os.str());
      }
    }
  }

  const std::size_t col_ind = choices.column("individual_id", choices_path);
  const std::size_t col_occ = choices.column("occasion_id", choices_path);
  const std::size_t col_alt = choices.column("alt_id", choices_path);
  const std::size_t col_chosen = choices.column("chosen", choices_path);
  const std::size_t col_avail = choices.column("available", choices_path);
  std::vector<std::size_t> fixed_cols, random_cols;
  std::vector<std::string> fixed_names, random_names;
  for (const auto& a : config.attributes) {
    const std::size_t c = choices.column(a.column, choices_path);
    if (a.random) {
      random_cols.push_back(c);
      random_names.push_back(a.column);
    } else {
      fixed_cols.push_back(c);
      fixed_names.push_back(a.column);
    }
  }
  std::optional<std::size_t> ps_col;
  if (!config.path_size_column.empty())
    ps_col = choices.column(config.path_size_column, choices_path);

  struct RawOcc {
    std::int64_t occasion_id;
    std::vector<std::size_t> rows;  // indices into choices.rows
  };
  struct RawInd {
    std::int64_t individual_id;
    std::vector<RawOcc> occasions;
    std::unordered_map<std::int64_t, std::size_t> occ_index;
  };
  std::vector<RawInd> raw;
  std::unordered_map<std::int64_t, std::size_t> ind_index;
  std::unordered_map<std::int64_t, std::int64_t> occ_owner;

  for (std::size_t r = 0; r < choices.rows.size(); ++r) {
    const long row_no = static_cast<long>(r) + 2;
    const std::int64_t ind_id =
        parse_int(choices.rows[r][col_ind], choices_path, row_no, "individual_id");
    const std::int64_t occ_id =
        parse_int(choices.rows[r][col_occ], choices_path, row_no, "occasion_id");
    auto [it, inserted] = ind_index.emplace(ind_id, raw.size());
    if (inserted) raw.push_back({ind_id, {}, {}});
    RawInd& ind = raw[it->second];
    auto owner = occ_owner.emplace(occ_id, ind_id);
    if (!owner.second && owner.first->second != ind_id) {
      std::ostringstream os;
      os << choices_path << " row " << row_no << ": occasion_id " << occ_id
         << " appears under two individuals";
      throw ValidationError(os.str());
    }
    auto [oit, o_inserted] = ind.occ_index.emplace(occ_id, ind.occasions.size());
    if (o_inserted) ind.occasions.push_back({occ_id, {}});
    ind.occasions[oit->second].rows.push_back(r);
  }

  ChoiceDataset data;
  data.n_fixed = static_cast<Eigen::Index>(fixed_cols.size() + config.ascs.size());
  data.n_random = static_cast<Eigen::Index>(random_cols.size());
  data.column_names = fixed_names;
  for (const auto& a : config.ascs) data.column_names.push_back(a.name);
  for (const auto& nme : random_names) data.column_names.push_back(nme);
  for (const auto& d : config.context) {
    data.context_names.push_back(d.column);
    data.context_kinds.push_back(d.kind);
  }
  data.variable_choice_set = config.variable_choice_set;

  const Eigen::Index P = data.n_params();
  for (auto& rind : raw) {
    Individual ind;
    ind.individual_id = rind.individual_id;
    for (auto& rocc : rind.occasions) {
      ChoiceOccasion occ;
      occ.occasion_id = rocc.occasion_id;
      const auto J = static_cast<Eigen::Index>(rocc.rows.size());
      occ.attributes.resize(J, P);
      occ.availability.resize(J);
      occ.alt_ids.resize(static_cast<std::size_t>(J));
      if (ps_col) occ.log_path_size.resize(J);
      std::unordered_set<std::int64_t> seen_alts;
      std::vector<long> chosen_rows;
      for (Eigen::Index j = 0; j < J; ++j) {
        const std::size_t r = rocc.rows[static_cast<std::size_t>(j)];
        const long row_no = static_cast<long>(r) + 2;
        const std::int64_t alt =
            parse_int(choices.rows[r][col_alt], choices_path, row_no, "alt_id");
        if (!seen_alts.insert(alt).second) {
          std::ostringstream os;
          os << choices_path << " row " << row_no << ": duplicate alternative " << alt
             << " in occasion " << rocc.occasion_id;
          throw ValidationError(os.str());
        }
        occ.alt_ids[static_cast<std::size_t>(j)] = alt;
        const std::int64_t ch =
            parse_int(choices.rows[r][col_chosen], choices_path, row_no, "chosen");
        const std::int64_t av =
            parse_int(choices.rows[r][col_avail], choices_path, row_no, "available");
        if (ch != 0 && ch != 1) {
          std::ostringstream os;
          os << choices_path << " row " << row_no << ": chosen must be 0 or 1";
          throw ValidationError(os.str());
        }
        if (av != 0 && av != 1) {
          std::ostringstream os;
          os << choices_path << " row " << row_no << ": available must be 0 or 1";
          throw ValidationError(os.str());
        }
        occ.availability(j) = av == 1;
        if (ch == 1) {
          occ.chosen = j;
          chosen_rows.push_back(row_no);
        }
        Eigen::Index col = 0;
        for (std::size_t f = 0; f < fixed_cols.size(); ++f, ++col)
          occ.attributes(j, col) = parse_double(choices.rows[r][fixed_cols[f]], choices_path,
                                                row_no, fixed_names[f]);
        for (const auto& a : config.ascs) {
          occ.attributes(j, col++) = alt == a.alt ? 1.0 : 0.0;
        }
        for (std::size_t f = 0; f < random_cols.size(); ++f, ++col)
          occ.attributes(j, col) = parse_double(choices.rows[r][random_cols[f]], choices_path,
                                                row_no, random_names[f]);
        if (ps_col) {
          const double ps = parse_double(choices.rows[r][*ps_col], choices_path, row_no,
                                         config.path_size_column);
          if (!(ps > 0.0)) {
            std::ostringstream os;
            os << choices_path << " row " << row_no << ": path size must be > 0";
            throw ValidationError(os.str());
          }
          occ.log_path_size(j) = std::log(ps);
        }
      }
      if (chosen_rows.empty()) {
        std::ostringstream os;
        os << choices_path << ": occasion " << rocc.occasion_id << " has no chosen row";
        throw ValidationError(os.str());
      }
      if (chosen_rows.size() > 1) {
        std::ostringstream os;
        os << choices_path << ": occasion " << rocc.occasion_id
           << " has multiple chosen rows (rows";
        for (long rr : chosen_rows) os << ' ' << rr;
        os << ")";
        throw ValidationError(os.str());
      }
      if (C > 0) {
        auto it = context_by_occ.find(rocc.occasion_id);
        if (it == context_by_occ.end()) {
          std::ostringstream os;
          os << choices_path << ": occasion " << rocc.occasion_id
             << " has no matching context row";
          throw ValidationError(os.str());
        }
        occ.context = it->second;
      } else {
        occ.context = Vec();
      }
      ind.occasions.push_back(std::move(occ));
    }
    data.individuals.push_back(std::move(ind));
  }
  data.validate();
  return data;
}

void write_choice_csv(const ChoiceDataset& data, const std::string& choices_path,
                      const std::string& context_path) {
  std::ofstream os(choices_path);
  if (!os) throw ValidationError("cannot open file for writing: " + choices_path);
  const bool ps = data.has_path_size();
  os << "individual_id,occasion_id,alt_id,chosen,available";
  for (const auto& c : data.column_names) os << ',' << c;
  if (ps) os << ",path_size";
  os << '\n';
  for (const auto& ind : data.individuals) {
    for (const auto& occ : ind.occasions) {
      for (Eigen::Index j = 0; j < occ.n_alternatives(); ++j) {
        os << ind.individual_id << ',' << occ.occasion_id << ','
           << occ.alt_ids[static_cast<std::size_t>(j)] << ',' << (j == occ.chosen ? 1 : 0)
           << ',' << (occ.availability(j) ? 1 : 0);
        for (Eigen::Index p = 0; p < occ.attributes.cols(); ++p)
          os << ',' << format_full(occ.attributes(j, p));
        if (ps) os << ',' << format_full(std::exp(occ.log_path_size(j)));
        os << '\n';
      }
    }
  }
  if (data.context_dim() > 0) {
    if (context_path.empty())
      throw ValidationError("dataset has context columns but no context path was given");
    std::ofstream cs(context_path);
    if (!cs) throw ValidationError("cannot open file for writing: " + context_path);
    cs << "occasion_id";
    for (const auto& c : data.context_names) cs << ',' << c;
    cs << '\n';
    for (const auto& ind : data.individuals) {
      for (const auto& occ : ind.occasions) {
        cs << occ.occasion_id;
        for (Eigen::Index c = 0; c < occ.context.size(); ++c)
          cs << ',' << format_full(occ.context(c));
        cs << '\n';
      }
    }
  }
}

ChoiceDataset build_interactions(const ChoiceDataset& data,
                                 const std::vector<InteractionDecl>& declarations) {
  if (declarations.empty()) return data;
  ChoiceDataset out = data;
  const Eigen::Index L = data.n_fixed;
  const Eigen::Index P = data.n_params();
  const auto n_inter = static_cast<Eigen::Index>(declarations.size());

  std::vector<Eigen::Index> attr_idx, ctx_idx;
  std::vector<std::string> inter_names;
  for (const auto& d : declarations) {
    const auto ait = std::find(data.column_names.begin(), data.column_names.end(), d.attribute);
    if (ait == data.column_names.end())
      throw ValidationError("build_interactions: unknown attribute column '" + d.attribute + "'");
    const auto cit = std::find(data.context_names.begin(), data.context_names.end(), d.context);
    if (cit == data.context_names.end())
      throw ValidationError("build_interactions: unknown context column '" + d.context + "'");
    attr_idx.push_back(ait - data.column_names.begin());
    ctx_idx.push_back(cit - data.context_names.begin());
    const std::string name = d.attribute + ":" + d.context;
    if (std::find(data.column_names.begin(), data.column_names.end(), name) !=
        data.column_names.end())
      throw ValidationError("build_interactions: column name collision for '" + name + "'");
    inter_names.push_back(name);
  }

  // Interaction coefficients are fixed effects: widen the fixed block.
  out.n_fixed = L + n_inter;
  out.column_names.clear();
  for (Eigen::Index i = 0; i < L; ++i)
    out.column_names.push_back(data.column_names[static_cast<std::size_t>(i)]);
  for (const auto& nme : inter_names) out.column_names.push_back(nme);
  for (Eigen::Index i = L; i < P; ++i)
    out.column_names.push_back(data.column_names[static_cast<std::size_t>(i)]);

  for (auto& ind : out.individuals) {
    for (auto& occ : ind.occasions) {
      const Mat& old = occ.attributes;
      Mat wide(old.rows(), P + n_inter);
      wide.leftCols(L) = old.leftCols(L);
      for (Eigen::Index m = 0; m < n_inter; ++m) {
        const double cval = occ.context(ctx_idx[static_cast<std::size_t>(m)]);
        wide.col(L + m) = old.col(attr_idx[static_cast<std::size_t>(m)]) * cval;
      }
      wide.rightCols(P - L) = old.rightCols(P - L);
      occ.attributes = std::move(wide);
    }
  }
  out.validate();
  return out;
}

json ScalingRecord::to_json() const {
  json j;
  json cols = json::array();
  for (const auto& e : columns)
    cols.push_back({{"name", e.name}, {"mean", e.mean}, {"sd", e.sd}});
  j["columns"] = cols;
  json ctx = json::array();
  for (const auto& e : context)
    ctx.push_back({{"name", e.name}, {"mean", e.mean}, {"sd", e.sd}});
  j["context"] = ctx;
  return j;
}

ScalingRecord ScalingRecord::from_json(const json& j) {
  ScalingRecord r;
  for (const auto& e : j.value("columns", json::array()))
    r.columns.push_back({e.at("name").get<std::string>(), e.at("mean").get<double>(),
                         e.at("sd").get<double>()});
  for (const auto& e : j.value("context", json::array()))
    r.context.push_back({e.at("name").get<std::string>(), e.at("mean").get<double>(),
                         e.at("sd").get<double>()});
  return r;
}

std::pair<ChoiceDataset, ScalingRecord> standardize(const ChoiceDataset& data) {
  ChoiceDataset out = data;
  ScalingRecord rec;
  const Eigen::Index P = data.n_params();
  // Attribute columns: moments over all rows of all occasions.
  for (Eigen::Index p = 0; p < P; ++p) {
    double sum = 0.0, sum2 = 0.0;
    long count = 0;
    for (const auto& ind : data.individuals)
      for (const auto& occ : ind.occasions)
        for (Eigen::Index j = 0; j < occ.attributes.rows(); ++j) {
          const double x = occ.attributes(j, p);
          sum += x;
          sum2 += x * x;
          ++count;
        }
    const double mean = sum / static_cast<double>(count);
    const double var = sum2 / static_cast<double>(count) - mean * mean;
    const double sd = std::sqrt(std::max(0.0, var));
    const std::string& name = data.column_names[static_cast<std::size_t>(p)];
    if (!(sd > 1e-12)) {
      rec.warnings.push_back("column '" + name + "' has zero variance; not scaled");
      continue;
    }
    rec.columns.push_back({name, mean, sd});
    for (auto& ind : out.individuals)
      for (auto& occ : ind.occasions) occ.attributes.col(p) = (occ.attributes.col(p).array() - mean) / sd;
  }
  // Continuous context columns.
  for (Eigen::Index c = 0; c < data.context_dim(); ++c) {
    if (data.context_kinds[static_cast<std::size_t>(c)] != ContextKind::continuous) continue;
    double sum = 0.0, sum2 = 0.0;
    long count = 0;
    for (const auto& ind : data.individuals)
      for (const auto& occ : ind.occasions) {
        sum += occ.context(c);
        sum2 += occ.context(c) * occ.context(c);
        ++count;
      }
    const double mean = sum / static_cast<double>(count);
    const double var = sum2 / static_cast<double>(count) - mean * mean;
    const double sd = std::sqrt(std::max(0.0, var));
    const std::string& name = data.context_names[static_cast<std::size_t>(c)];
    if (!(sd > 1e-12)) {
      rec.warnings.push_back("context column '" + name + "' has zero variance; not scaled");
      continue;
    }
    rec.context.push_back({name, mean, sd});
    for (auto& ind : out.individuals)
      for (auto& occ : ind.occasions) occ.context(c) = (occ.context(c) - mean) / sd;
  }
  return {std::move(out), std::move(rec)};
}

ChoiceDataset apply_scaling(const ChoiceDataset& data, const ScalingRecord& record) {
  if (record.empty()) return data;
  ChoiceDataset out = data;
  for (const auto& e : record.columns) {
    const auto it = std::find(data.column_names.begin(), data.column_names.end(), e.name);
    if (it == data.column_names.end())
      throw ValidationError("apply_scaling: dataset lacks column '" + e.name + "'");
    const Eigen::Index p = it - data.column_names.begin();
    for (auto& ind : out.individuals)
      for (auto& occ : ind.occasions)
        occ.attributes.col(p) = (occ.attributes.col(p).array() - e.mean) / e.sd;
  }
  for (const auto& e : record.context) {
    const auto it = std::find(data.context_names.begin(), data.context_names.end(), e.name);
    if (it == data.context_names.end())
      throw ValidationError("apply_scaling: dataset lacks context column '" + e.name + "'");
    const Eigen::Index c = it - data.context_names.begin();
    for (auto& ind : out.individuals)
      for (auto& occ : ind.occasions) occ.context(c) = (occ.context(c) - e.mean) / e.sd;
  }
  return out;
}

double to_original_units(double standardized_coef, const ScalingRecord::Entry& entry) {
  return standardized_coef / entry.sd;
}

ModelConfig default_config_for(const SimSpec& spec, ModelKind model) {
  ModelConfig c;
  c.model = model;
  for (Eigen::Index i = 0; i < spec.n_fixed; ++i)
    c.attributes.push_back({"xf" + std::to_string(i + 1), false});
  for (Eigen::Index k = 0; k < spec.n_random; ++k)
    c.attributes.push_back({"xr" + std::to_string(k + 1), true});
  for (const auto& ctx : spec.context) c.context.push_back({ctx.name, ctx.kind});
  c.fit.seed = spec.seed;
  c.validate();
  return c;
}

}  // namespace cmmnl
