// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#include "schedlab/workload.h"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "schedlab/policies/arbiter.h"
#include "schedlab/policies/locality.h"

namespace schedlab {

namespace {

[[noreturn]] void Fail(int line, const std::string& what) {
  throw std::runtime_error("workload line " + std::to_string(line) + ": " +
                           what);
}

std::map<std::string, std::string> ParsePairs(std::istringstream& in,
                                              int line) {
  std::map<std::string, std::string> kv;
  std::string tok;
  while (in >> tok) {
    const size_t eq = tok.find('=');
    if (eq == std::string::npos) Fail(line, "expected key=value, got " + tok);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

uint64_t Num(const std::map<std::string, std::string>& kv,
             const std::string& key, int line) {
  auto it = kv.find(key);
  if (it == kv.end()) Fail(line, "missing " + key);
  return std::stoull(it->second);
}

uint64_t NumOr(const std::map<std::string, std::string>& kv,
               const std::string& key, uint64_t fallback) {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stoull(it->second);
}

std::vector<ProgramStep> ParseProgram(const std::string& text, int line) {
  std::vector<ProgramStep> program;
  std::istringstream in(text);
  std::string step;
  while (std::getline(in, step, ',')) {
    const size_t colon = step.find(':');
    const std::string op = step.substr(0, colon);
    const uint64_t arg =
        colon == std::string::npos ? 0 : std::stoull(step.substr(colon + 1));
    if (op == "compute") {
      program.push_back(ComputeStep{arg});
    } else if (op == "block") {
      program.push_back(BlockStep{arg});
    } else if (op == "signal") {
      program.push_back(SignalStep{arg});
    } else if (op == "yield") {
      program.push_back(YieldStep{});
    } else if (op == "exit") {
      program.push_back(ExitStep{});
    } else {
      Fail(line, "unknown program step " + op);
    }
  }
  if (program.empty() ||
      !std::holds_alternative<ExitStep>(program.back())) {
    Fail(line, "program must end with exit");
  }
  return program;
}

}  // namespace

Workload ParseWorkload(std::istream& in) {
  Workload w;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    std::istringstream ls(raw);
    std::string verb;
    if (!(ls >> verb)) continue;

    if (verb == "task") {
      auto kv = ParsePairs(ls, line);
      TaskSpec spec;
      spec.id = TaskId{Num(kv, "id", line)};
      spec.nice = static_cast<Nice>(
          std::stoll(kv.contains("nice") ? kv.at("nice") : "0"));
      spec.arrival_ns = NumOr(kv, "arrive", 0);
      spec.policy = static_cast<PolicyId>(NumOr(kv, "policy", 1));
      spec.cohort = static_cast<uint32_t>(NumOr(kv, "cohort", 0));
      if (kv.contains("pin")) {
        spec.pinned = CoreId{static_cast<uint32_t>(Num(kv, "pin", line))};
      }
      auto prog = kv.find("program");
      if (prog == kv.end()) Fail(line, "missing program");
      spec.program = ParseProgram(prog->second, line);
      w.tasks.push_back(std::move(spec));
    } else if (verb == "migrate") {
      auto kv = ParsePairs(ls, line);
      MigrateDirective m;
      m.at_ns = Num(kv, "at", line);
      m.task = TaskId{Num(kv, "task", line)};
      m.to = CoreId{static_cast<uint32_t>(Num(kv, "to", line))};
      w.migrations.push_back(m);
    } else if (verb == "hint") {
      auto kv = ParsePairs(ls, line);
      HintDirective h;
      h.at_ns = NumOr(kv, "at", 0);
      h.policy = static_cast<PolicyId>(NumOr(kv, "policy", 1));
      auto kind = kv.find("kind");
      if (kind == kv.end()) Fail(line, "missing kind");
      if (kind->second == "locality") {
        policies::LocalityHint hint;
        hint.task = Num(kv, "task", line);
        hint.group = static_cast<uint32_t>(Num(kv, "group", line));
        h.kind = HintDirective::Kind::kLocality;
        h.record = hint.Encode();
      } else if (kind->second == "arbiter_request") {
        policies::ArbiterRequest req;
        req.kind = policies::ArbiterRequest::kRequestCores;
        req.app = static_cast<uint32_t>(Num(kv, "app", line));
        req.arg = Num(kv, "cores", line);
        h.kind = HintDirective::Kind::kArbiterRequest;
        h.record = req.Encode();
      } else if (kind->second == "arbiter_bind") {
        policies::ArbiterRequest req;
        req.kind = policies::ArbiterRequest::kBindTask;
        req.app = static_cast<uint32_t>(Num(kv, "app", line));
        req.arg = Num(kv, "task", line);
        h.kind = HintDirective::Kind::kArbiterBind;
        h.record = req.Encode();
      } else {
        Fail(line, "unknown hint kind " + kind->second);
      }
      w.hints.push_back(std::move(h));
    } else {
      Fail(line, "unknown directive " + verb);
    }
  }
  return w;
}

Workload LoadWorkloadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw std::runtime_error("cannot open workload file " + path);
  }
  return ParseWorkload(in);
}

namespace {

void FormatProgram(std::ostream& out, const std::vector<ProgramStep>& program) {
  bool first = true;
  for (const ProgramStep& step : program) {
    if (!first) out << ",";
    first = false;
    if (const auto* c = std::get_if<ComputeStep>(&step)) {
      out << "compute:" << c->duration_ns;
    } else if (const auto* b = std::get_if<BlockStep>(&step)) {
      out << "block:" << b->event;
    } else if (const auto* s = std::get_if<SignalStep>(&step)) {
      out << "signal:" << s->event;
    } else if (std::holds_alternative<YieldStep>(step)) {
      out << "yield";
    } else {
      out << "exit";
    }
  }
}

}  // namespace

std::string FormatWorkload(const Workload& workload) {
  std::ostringstream out;
  for (const TaskSpec& t : workload.tasks) {
    out << "task id=" << t.id.id << " nice=" << t.nice
        << " arrive=" << t.arrival_ns << " policy=" << t.policy;
    if (t.pinned.has_value()) out << " pin=" << t.pinned->index;
    if (t.cohort != 0) out << " cohort=" << t.cohort;
    out << " program=";
    FormatProgram(out, t.program);
    out << "\n";
  }
  for (const MigrateDirective& m : workload.migrations) {
    out << "migrate at=" << m.at_ns << " task=" << m.task.id
        << " to=" << m.to.index << "\n";
  }
  for (const HintDirective& h : workload.hints) {
    switch (h.kind) {
      case HintDirective::Kind::kLocality: {
        auto loc = policies::LocalityHint::Decode(h.record);
        if (!loc.has_value()) break;
        out << "hint at=" << h.at_ns << " policy=" << h.policy
            << " kind=locality task=" << loc->task << " group=" << loc->group
            << "\n";
        break;
      }
      case HintDirective::Kind::kArbiterRequest:
      case HintDirective::Kind::kArbiterBind: {
        auto req = policies::ArbiterRequest::Decode(h.record);
        if (!req.has_value()) break;
        if (req->kind == policies::ArbiterRequest::kRequestCores) {
          out << "hint at=" << h.at_ns << " policy=" << h.policy
              << " kind=arbiter_request app=" << req->app
              << " cores=" << req->arg << "\n";
        } else {
          out << "hint at=" << h.at_ns << " policy=" << h.policy
              << " kind=arbiter_bind app=" << req->app << " task=" << req->arg
              << "\n";
        }
        break;
      }
      case HintDirective::Kind::kRaw:
        break;  // raw hints have no file syntax
    }
  }
  return out.str();
}

void SaveWorkloadFile(const std::string& path, const Workload& workload) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.is_open()) {
    throw std::runtime_error("cannot write workload file " + path);
  }
  out << FormatWorkload(workload);
}

}  // namespace schedlab
