#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "cfweave/cfg/cfg.hpp"
#include "cfweave/classfile/jar.hpp"

namespace cfweave::cfg {

namespace {

constexpr int kCharWidth = 7;
constexpr int kLineHeight = 14;
constexpr int kPad = 6;
constexpr int kRankGap = 60;
constexpr int kColGap = 40;
constexpr std::size_t kMaxInsnLines = 12;

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string edge_label(const Edge& e) {
  switch (e.kind) {
    case EdgeKind::SwitchCase: return e.case_value ? "Case " + std::to_string(*e.case_value) : "Default";
    case EdgeKind::FallThrough: return "";
    default: return to_string(e.kind);
  }
}

struct Node {
  std::vector<std::string> lines;
  int x = 0, y = 0, w = 0, h = 0;
};

// Longest-path rank over the graph with DFS back edges removed.
std::vector<int> ranks(const Cfg& g) {
  const std::size_t n = g.blocks.size();
  std::vector<int> state(n, 0), order;
  std::vector<std::vector<std::size_t>> forward(n);
  std::function<void(std::size_t)> dfs = [&](std::size_t u) {
    state[u] = 1;
    for (auto ei : g.blocks[u].successor_edges) {
      const auto v = g.edges[ei].to;
      if (state[v] == 1) continue;  // back edge
      forward[u].push_back(v);
      if (state[v] == 0) dfs(v);
    }
    state[u] = 2;
    order.push_back(u);
  };
  for (std::size_t u = 0; u < n; ++u)
    if (state[u] == 0) dfs(u);
  std::vector<int> rank(n, 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    for (auto v : forward[*it]) rank[v] = std::max(rank[v], rank[*it] + 1);
  return rank;
}

void render_graph(std::ostringstream& os, const std::string& title, const Cfg& g) {
  std::vector<Node> nodes(g.blocks.size());
  for (std::size_t k = 0; k < g.blocks.size(); ++k) {
    const auto& b = g.blocks[k];
    auto& node = nodes[k];
    node.lines.push_back(b.id + " [" + to_string(b.type) + (b.synthetic ? ", synthetic" : "") + "]");
    std::size_t shown = 0, real = 0;
    for (std::size_t i = b.first; i <= b.last; ++i) {
      if (!g.insns[i].is_real()) continue;
      ++real;
      if (shown < kMaxInsnLines) {
        node.lines.push_back(g.insns[i].to_string());
        ++shown;
      }
    }
    if (real > shown) node.lines.push_back("... " + std::to_string(real - shown) + " more");
    std::size_t widest = 0;
    for (const auto& l : node.lines) widest = std::max(widest, l.size());
    node.w = static_cast<int>(widest) * kCharWidth + 2 * kPad;
    node.h = static_cast<int>(node.lines.size()) * kLineHeight + 2 * kPad;
  }

  const auto rank = ranks(g);
  std::map<int, std::vector<std::size_t>> layers;
  for (std::size_t k = 0; k < g.blocks.size(); ++k) layers[rank[k]].push_back(k);
  int y = 20, width = 0;
  for (auto& [r, members] : layers) {
    int x = 20, tallest = 0;
    for (auto k : members) {
      nodes[k].x = x;
      nodes[k].y = y;
      x += nodes[k].w + kColGap;
      tallest = std::max(tallest, nodes[k].h);
    }
    width = std::max(width, x);
    y += tallest + kRankGap;
  }

  os << "<div class=\"graph\"><h2>" << escape(title) << "</h2>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << y
     << "\" font-family=\"monospace\" font-size=\"12\">\n";
  os << "<defs><marker id=\"arrow\" markerWidth=\"8\" markerHeight=\"8\" refX=\"8\" refY=\"4\" orient=\"auto\">"
        "<path d=\"M0,0 L8,4 L0,8 z\" fill=\"#444\"/></marker></defs>\n";
  for (const auto& e : g.edges) {
    const auto& a = nodes[e.from];
    const auto& b = nodes[e.to];
    const int x1 = a.x + a.w / 2, y1 = a.y + a.h;
    const int x2 = b.x + b.w / 2, y2 = b.y;
    const std::string label = edge_label(e);
    os << "<g class=\"edge\" data-kind=\"" << to_string(e.kind) << "\" data-from=\"" << escape(g.blocks[e.from].id)
       << "\" data-to=\"" << escape(g.blocks[e.to].id) << "\">";
    os << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2 << "\" stroke=\""
       << (e.kind == EdgeKind::HandlerEntry ? "#c33" : "#444") << "\""
       << (e.kind == EdgeKind::HandlerEntry ? " stroke-dasharray=\"4 3\"" : "") << " marker-end=\"url(#arrow)\"/>";
    if (!label.empty())
      os << "<text class=\"edge-label\" x=\"" << (x1 + x2) / 2 + 4 << "\" y=\"" << (y1 + y2) / 2 << "\">"
         << escape(label) << "</text>";
    os << "</g>\n";
  }
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& n = nodes[k];
    os << "<g class=\"block\" data-id=\"" << escape(g.blocks[k].id) << "\" data-type=\"" << to_string(g.blocks[k].type)
       << "\"><rect x=\"" << n.x << "\" y=\"" << n.y << "\" width=\"" << n.w << "\" height=\"" << n.h
       << "\" fill=\"" << (g.blocks[k].synthetic ? "#fff4d6" : "#eef3fb") << "\" stroke=\"#335\"/>";
    for (std::size_t l = 0; l < n.lines.size(); ++l)
      os << "<text x=\"" << n.x + kPad << "\" y=\"" << n.y + kPad + static_cast<int>(l + 1) * kLineHeight - 3
         << "\"" << (l == 0 ? " font-weight=\"bold\"" : "") << ">" << escape(n.lines[l]) << "</text>";
    os << "</g>\n";
  }
  os << "</svg></div>\n";
}

std::string file_safe(std::string s) {
  for (char& c : s)
    if (c == '/')
      c = '.';
    else if (c == '<' || c == '>' || c == '$' || c == ';' || c == '(' || c == ')' || c == '[') c = '_';
  return s;
}

}  // namespace

std::string cfg_html(const std::string& class_name, const Cfg& before, const Cfg* after) {
  std::ostringstream os;
  const std::string title = class_name + "." + before.method_name + before.descriptor;
  os << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" << escape(title) << "</title>\n"
     << "<style>body{font-family:sans-serif}.graphs{display:flex;gap:40px;align-items:flex-start}"
        "h2{font-size:14px}</style></head><body>\n";
  os << "<h1>" << escape(title) << "</h1>\n<div class=\"graphs\">\n";
  render_graph(os, after != nullptr ? "before" : "cfg", before);
  if (after != nullptr) render_graph(os, "after", *after);
  os << "</div></body></html>\n";
  return os.str();
}

std::filesystem::path render_cfg_html(const std::string& class_name, const Cfg& before, const Cfg* after,
                                      const std::filesystem::path& out_dir) {
  std::ostringstream name;
  name << file_safe(class_name) << "." << file_safe(before.method_name) << "." << std::hex
       << (std::hash<std::string>{}(before.descriptor) & 0xFFFFFFFFu) << ".html";
  const auto path = out_dir / name.str();
  const auto doc = cfg_html(class_name, before, after);
  classfile::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(doc.data()), doc.size()));
  return path;
}

}  // namespace cfweave::cfg
