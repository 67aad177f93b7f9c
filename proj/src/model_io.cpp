#include "wifiloc/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wifiloc/gbm.hpp"
#include "wifiloc/nn.hpp"

namespace wifiloc {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'W', 'L', 'M', 'O', 'D', 'E', 'L', '1'};

json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(),
                                           static_cast<Eigen::Index>(data.size()));
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  // column-major storage order
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw CorruptFile("matrix size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

json booster_to_json(const GbmBooster& booster) {
  json trees = json::array();
  for (const auto& tree : booster.trees) {
    json t;
    auto& features = t["feature"] = json::array();
    auto& thresholds = t["threshold"] = json::array();
    auto& lefts = t["left"] = json::array();
    auto& rights = t["right"] = json::array();
    auto& values = t["value"] = json::array();
    for (const auto& node : tree.nodes) {
      features.push_back(node.feature);
      thresholds.push_back(node.threshold);
      lefts.push_back(node.left);
      rights.push_back(node.right);
      values.push_back(node.value);
    }
    trees.push_back(std::move(t));
  }
  return {{"base", booster.base}, {"trees", std::move(trees)}};
}

GbmBooster booster_from_json(const json& j) {
  GbmBooster booster;
  booster.base = j.at("base").get<double>();
  for (const auto& t : j.at("trees")) {
    GbmTree tree;
    const auto& features = t.at("feature");
    const auto& thresholds = t.at("threshold");
    const auto& lefts = t.at("left");
    const auto& rights = t.at("right");
    const auto& values = t.at("value");
    const size_t n = features.size();
    if (thresholds.size() != n || lefts.size() != n || rights.size() != n ||
        values.size() != n)
      throw CorruptFile("ragged tree arrays");
    tree.nodes.resize(n);
    for (size_t i = 0; i < n; ++i) {
      tree.nodes[i].feature = features[i].get<int>();
      tree.nodes[i].threshold = thresholds[i].get<double>();
      tree.nodes[i].left = lefts[i].get<int>();
      tree.nodes[i].right = rights[i].get<int>();
      tree.nodes[i].value = values[i].get<double>();
    }
    booster.trees.push_back(std::move(tree));
  }
  return booster;
}

json bn_to_json(const nn::BatchNorm& bn) {
  return {{"gamma", vector_to_json(bn.gamma)},
          {"beta", vector_to_json(bn.beta)},
          {"moving_mean", vector_to_json(bn.moving_mean)},
          {"moving_var", vector_to_json(bn.moving_var)}};
}

nn::BatchNorm bn_from_json(const json& j) {
  return {vector_from_json(j.at("gamma")), vector_from_json(j.at("beta")),
          vector_from_json(j.at("moving_mean")), vector_from_json(j.at("moving_var"))};
}

json dense_to_json(const nn::Dense& d) {
  return {{"w", matrix_to_json(d.w)}, {"b", vector_to_json(d.b)}};
}

nn::Dense dense_from_json(const json& j) {
  return {matrix_from_json(j.at("w")), vector_from_json(j.at("b"))};
}

json lstm_to_json(const nn::Lstm& l) {
  return {{"w_input", matrix_to_json(l.w_input)},
          {"w_recurrent", matrix_to_json(l.w_recurrent)},
          {"bias", vector_to_json(l.bias)}};
}

nn::Lstm lstm_from_json(const json& j) {
  return {matrix_from_json(j.at("w_input")), matrix_from_json(j.at("w_recurrent")),
          vector_from_json(j.at("bias"))};
}

json model_to_json(const Regressor2D& model);

json knn_to_json(const KnnModel& knn) {
  json j;
  j["type"] = "knn";
  j["k"] = knn.k();
  j["features"] = knn.train_features();
  json targets = json::array();
  for (const auto& t : knn.train_targets()) targets.push_back({t.x, t.y});
  j["targets"] = std::move(targets);
  return j;
}

json gbm_to_json(const GbmModel& gbm) {
  const auto& p = gbm.params();
  json j;
  j["type"] = "gbm";
  j["seed"] = gbm.seed();
  j["width"] = gbm.input_width();
  j["params"] = {{"learning_rate", p.learning_rate},
                 {"feature_fraction", p.feature_fraction},
                 {"bagging_fraction", p.bagging_fraction},
                 {"bagging_freq", p.bagging_freq},
                 {"max_depth", p.max_depth},
                 {"num_leaves", p.num_leaves},
                 {"max_bin", p.max_bin},
                 {"num_iterations", p.num_iterations},
                 {"min_data_in_leaf", p.min_data_in_leaf},
                 {"min_split_gain", p.min_split_gain}};
  j["booster_x"] = booster_to_json(gbm.booster_x());
  j["booster_y"] = booster_to_json(gbm.booster_y());
  return j;
}

json nn_to_json(const NnModel& nn_model) {
  const auto& a = nn_model.architecture();
  const auto& c = nn_model.config();
  const auto& p = nn_model.params();
  json j;
  j["type"] = "nn";
  j["seed"] = nn_model.seed();
  j["arch"] = {{"input_width", a.input_width}, {"dense1", a.dense1},
               {"dense2", a.dense2},           {"lstm1", a.lstm1},
               {"lstm2", a.lstm2},             {"lstm3", a.lstm3},
               {"dropout1", a.dropout1},       {"dropout2", a.dropout2},
               {"dropout3", a.dropout3}};
  j["config"] = {{"learning_rate", c.learning_rate},
                 {"batch_size", c.batch_size},
                 {"epochs", c.epochs},
                 {"validation_fraction", c.validation_fraction},
                 {"early_stop_patience", c.early_stop_patience},
                 {"input_offset", c.input_offset},
                 {"input_scale", c.input_scale}};
  j["layers"] = {{"bn1", bn_to_json(p.bn1)},       {"dn1", dense_to_json(p.dn1)},
                 {"bn2", bn_to_json(p.bn2)},       {"dn2", dense_to_json(p.dn2)},
                 {"bn3", bn_to_json(p.bn3)},       {"lstm1", lstm_to_json(p.lstm1)},
                 {"bn4", bn_to_json(p.bn4)},       {"lstm2", lstm_to_json(p.lstm2)},
                 {"bn5", bn_to_json(p.bn5)},       {"lstm3", lstm_to_json(p.lstm3)},
                 {"bn6", bn_to_json(p.bn6)},       {"xy", dense_to_json(p.xy)}};
  return j;
}

json constant_to_json(const ConstantModel& model) {
  json j;
  j["type"] = "constant";
  j["width"] = model.input_width();
  j["mean"] = {model.mean().x, model.mean().y};
  return j;
}

json ensemble_to_json(const EnsembleModel& ensemble) {
  json j;
  j["type"] = "ensemble";
  json components = json::array();
  for (size_t i = 0; i < ensemble.component_count(); ++i)
    components.push_back({{"weight", ensemble.weight(i)},
                          {"model", model_to_json(*ensemble.component(i))}});
  j["components"] = std::move(components);
  return j;
}

json model_to_json(const Regressor2D& model) {
  if (const auto* knn = dynamic_cast<const KnnModel*>(&model)) return knn_to_json(*knn);
  if (const auto* gbm = dynamic_cast<const GbmModel*>(&model)) return gbm_to_json(*gbm);
  if (const auto* nn_model = dynamic_cast<const NnModel*>(&model))
    return nn_to_json(*nn_model);
  if (const auto* constant = dynamic_cast<const ConstantModel*>(&model))
    return constant_to_json(*constant);
  if (const auto* ensemble = dynamic_cast<const EnsembleModel*>(&model))
    return ensemble_to_json(*ensemble);
  throw ModelError("unknown model kind '" + model.kind() + "'");
}

std::shared_ptr<Regressor2D> model_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "knn") {
    auto features = j.at("features").get<std::vector<std::vector<double>>>();
    std::vector<Point2> targets;
    for (const auto& t : j.at("targets"))
      targets.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
    auto model = std::make_shared<KnnModel>(j.at("k").get<int>());
    model->restore(j.at("k").get<int>(), std::move(features), std::move(targets));
    return model;
  }
  if (type == "gbm") {
    const auto& p = j.at("params");
    GbmParams params;
    params.learning_rate = p.at("learning_rate").get<double>();
    params.feature_fraction = p.at("feature_fraction").get<double>();
    params.bagging_fraction = p.at("bagging_fraction").get<double>();
    params.bagging_freq = p.at("bagging_freq").get<int>();
    params.max_depth = p.at("max_depth").get<int>();
    params.num_leaves = p.at("num_leaves").get<int>();
    params.max_bin = p.at("max_bin").get<int>();
    params.num_iterations = p.at("num_iterations").get<int>();
    params.min_data_in_leaf = p.at("min_data_in_leaf").get<int>();
    params.min_split_gain = p.at("min_split_gain").get<double>();
    auto model = std::make_shared<GbmModel>(params, j.at("seed").get<uint64_t>());
    model->restore(params, j.at("seed").get<uint64_t>(), j.at("width").get<size_t>(),
                   booster_from_json(j.at("booster_x")),
                   booster_from_json(j.at("booster_y")));
    return model;
  }
  if (type == "nn") {
    const auto& a = j.at("arch");
    NnArchitecture arch;
    arch.input_width = a.at("input_width").get<int>();
    arch.dense1 = a.at("dense1").get<int>();
    arch.dense2 = a.at("dense2").get<int>();
    arch.lstm1 = a.at("lstm1").get<int>();
    arch.lstm2 = a.at("lstm2").get<int>();
    arch.lstm3 = a.at("lstm3").get<int>();
    arch.dropout1 = a.at("dropout1").get<double>();
    arch.dropout2 = a.at("dropout2").get<double>();
    arch.dropout3 = a.at("dropout3").get<double>();
    const auto& c = j.at("config");
    NnTrainConfig config;
    config.learning_rate = c.at("learning_rate").get<double>();
    config.batch_size = c.at("batch_size").get<int>();
    config.epochs = c.at("epochs").get<int>();
    config.validation_fraction = c.at("validation_fraction").get<double>();
    config.early_stop_patience = c.at("early_stop_patience").get<int>();
    config.input_offset = c.at("input_offset").get<double>();
    config.input_scale = c.at("input_scale").get<double>();
    auto model = std::make_shared<NnModel>(arch, config, j.at("seed").get<uint64_t>());
    const auto& layers = j.at("layers");
    auto& p = model->params();
    p.bn1 = bn_from_json(layers.at("bn1"));
    p.dn1 = dense_from_json(layers.at("dn1"));
    p.bn2 = bn_from_json(layers.at("bn2"));
    p.dn2 = dense_from_json(layers.at("dn2"));
    p.bn3 = bn_from_json(layers.at("bn3"));
    p.lstm1 = lstm_from_json(layers.at("lstm1"));
    p.bn4 = bn_from_json(layers.at("bn4"));
    p.lstm2 = lstm_from_json(layers.at("lstm2"));
    p.bn5 = bn_from_json(layers.at("bn5"));
    p.lstm3 = lstm_from_json(layers.at("lstm3"));
    p.bn6 = bn_from_json(layers.at("bn6"));
    p.xy = dense_from_json(layers.at("xy"));
    model->mark_fitted();
    return model;
  }
  if (type == "constant") {
    auto model = std::make_shared<ConstantModel>();
    model->restore(j.at("width").get<size_t>(),
                   {j.at("mean").at(0).get<double>(), j.at("mean").at(1).get<double>()});
    return model;
  }
  if (type == "ensemble") {
    auto model = std::make_shared<EnsembleModel>();
    for (const auto& component : j.at("components"))
      model->add(model_from_json(component.at("model")),
                 component.at("weight").get<double>());
    return model;
  }
  throw CorruptFile("unknown model type '" + type + "'");
}

}  // namespace

void save_model(const Regressor2D& model, const std::string& path, const ModelMeta& meta) {
  json doc;
  doc["meta"] = {{"vocabulary_fingerprint", meta.vocabulary_fingerprint}};
  doc["model"] = model_to_json(model);
  const auto payload = json::to_msgpack(doc);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFile("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  if (bytes.size() < sizeof(kMagic)) throw CorruptFile("file shorter than the magic header");
  if (bytes.compare(0, 7, kMagic, 7) != 0) throw CorruptFile("bad magic");
  if (bytes[7] != kMagic[7]) throw VersionMismatch(std::string(1, bytes[7]));
  json doc;
  try {
    doc = json::from_msgpack(bytes.begin() + sizeof(kMagic), bytes.end());
  } catch (const json::exception& e) {
    throw CorruptFile(e.what());
  }
  LoadedModel loaded;
  try {
    loaded.meta.vocabulary_fingerprint =
        doc.at("meta").value("vocabulary_fingerprint", "");
    loaded.model = model_from_json(doc.at("model"));
  } catch (const json::exception& e) {
    throw CorruptFile(e.what());
  }
  return loaded;
}

}  // namespace wifiloc
