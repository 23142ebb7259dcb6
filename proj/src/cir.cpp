#include "purevm/cir.hpp"

#include <cstdint>
#include <fstream>

namespace purevm {
namespace {

constexpr char kMagic[4] = {'C', 'I', 'R', '1'};

struct Writer {
    std::string out;

    void u8(std::uint8_t v) { out.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        u8(v & 0xFF);
        u8(v >> 8);
    }
    void u32(std::uint32_t v) {
        u16(v & 0xFFFF);
        u16(v >> 16);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        out.append(s);
    }
};

struct Reader {
    const std::string& in;
    std::size_t pos = 0;

    explicit Reader(const std::string& s) : in(s) {}

    std::uint8_t u8() {
        if (pos >= in.size()) throw CirError("truncated file");
        return static_cast<std::uint8_t>(in[pos++]);
    }
    std::uint16_t u16() {
        std::uint16_t lo = u8();
        return static_cast<std::uint16_t>(lo | (u8() << 8));
    }
    std::uint32_t u32() {
        std::uint32_t lo = u16();
        return lo | (static_cast<std::uint32_t>(u16()) << 16);
    }
    std::string str() {
        std::uint32_t n = u32();
        if (in.size() - pos < n) throw CirError("truncated string");
        std::string s = in.substr(pos, n);
        pos += n;
        return s;
    }
    void done() {
        if (pos != in.size()) throw CirError("trailing bytes");
    }
};

void write_config(Writer& w, const VmConfig& c) {
    w.u32(static_cast<std::uint32_t>(c.events.size()));
    for (const auto& e : c.events) w.str(e);
    w.str(c.platform);
    w.u32(c.nvm_size);
    w.u32(c.queue_capacity);
    w.u32(c.page_size);
    std::uint8_t opts = 0;
    if (c.has_opt(Optimization::BlockFusion)) opts |= 1;
    if (c.has_opt(Optimization::LoopOpt)) opts |= 2;
    w.u8(opts);
    w.u8(static_cast<std::uint8_t>(c.backend));
    w.u32(c.loop_unroll);
    w.u32(c.stack_depth);
}

VmConfig read_config(Reader& r) {
    VmConfig c;
    std::uint32_t n = r.u32();
    c.events.clear();
    for (std::uint32_t i = 0; i < n; ++i) c.events.push_back(r.str());
    c.platform = r.str();
    c.nvm_size = r.u32();
    c.queue_capacity = r.u32();
    c.page_size = r.u32();
    std::uint8_t opts = r.u8();
    c.optimize.clear();
    if (opts & 1) c.optimize.push_back(Optimization::BlockFusion);
    if (opts & 2) c.optimize.push_back(Optimization::LoopOpt);
    std::uint8_t b = r.u8();
    if (b > 2) throw CirError("unknown backend code");
    c.backend = static_cast<Backend>(b);
    c.loop_unroll = r.u32();
    c.stack_depth = r.u32();
    return c;
}

void write_layout(Writer& w, const Layout& l) {
    w.u32(l.page_size);
    w.u32(l.runtime_base);
    w.u32(l.stack_base);
    w.u32(l.stack_frames);
    w.u32(l.queue_base);
    w.u32(l.queue_slots);
    w.u32(l.globals_base);
    w.u32(l.globals_words);
    w.u32(l.undo_base);
    w.u32(l.undo_entries);
    w.u32(l.total_words);
}

Layout read_layout(Reader& r) {
    Layout l;
    l.page_size = r.u32();
    l.runtime_base = r.u32();
    l.stack_base = r.u32();
    l.stack_frames = r.u32();
    l.queue_base = r.u32();
    l.queue_slots = r.u32();
    l.globals_base = r.u32();
    l.globals_words = r.u32();
    l.undo_base = r.u32();
    l.undo_entries = r.u32();
    l.total_words = r.u32();
    return l;
}

}  // namespace

std::string encode_cir(const IrProgram& p) {
    Writer w;
    w.out.append(kMagic, 4);
    write_config(w, p.config);
    write_layout(w, p.layout);

    w.u32(static_cast<std::uint32_t>(p.cells.size()));
    for (const CellInfo& c : p.cells) {
        w.u32(c.addr);
        w.u8(static_cast<std::uint8_t>(c.tag));
        w.str(c.name);
        w.u8(c.literal ? 1 : 0);
    }
    w.u32(static_cast<std::uint32_t>(p.arrays.size()));
    for (const ArrayInfo& a : p.arrays) {
        w.u32(a.base);
        w.u32(a.len);
        w.u8(static_cast<std::uint8_t>(a.tag));
        w.str(a.name);
    }
    w.u32(static_cast<std::uint32_t>(p.blocks.size()));
    for (const Block& b : p.blocks) {
        w.str(b.label);
        w.u32(static_cast<std::uint32_t>(b.instrs.size()));
        for (const CallIns& ins : b.instrs) {
            w.u8(static_cast<std::uint8_t>(ins.op));
            w.u16(ins.flow);
            w.u16(ins.a);
            w.u16(ins.b);
            w.u16(ins.result);
            w.u16(ins.array);
            w.u8(static_cast<std::uint8_t>(ins.tag));
        }
        w.u8(static_cast<std::uint8_t>(b.term.kind));
        w.u16(b.term.slot);
        w.u16(b.term.then_block);
        w.u16(b.term.else_block);
        w.u8(b.term.loop_back ? 1 : 0);
        w.u32(static_cast<std::uint32_t>(b.term.conts.size()));
        for (BlockId id : b.term.conts) w.u16(id);
    }
    w.u32(static_cast<std::uint32_t>(p.handlers.size()));
    for (const HandlerInfo& h : p.handlers) {
        w.u16(h.entry);
        w.u16(h.payload);
        w.u8(static_cast<std::uint8_t>(h.payload_tag));
        w.str(h.name);
    }
    w.u32(static_cast<std::uint32_t>(p.interrupts.size()));
    for (const auto& [name, ev] : p.interrupts) {
        w.str(name);
        w.u16(ev);
    }
    w.u32(static_cast<std::uint32_t>(p.global_slots.size()));
    for (const auto& [name, slot] : p.global_slots) {
        w.str(name);
        w.u16(slot);
    }
    w.u32(static_cast<std::uint32_t>(p.image.size()));
    for (Word word : p.image) w.u16(word);
    return w.out;
}

IrProgram decode_cir(const std::string& bytes) {
    if (bytes.size() < 4 || std::string(bytes, 0, 4) != std::string(kMagic, 4))
        throw CirError("bad magic, not a compiled image");
    Reader r(bytes);
    r.pos = 4;
    IrProgram p;
    p.config = read_config(r);
    p.layout = read_layout(r);

    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        CellInfo c;
        c.addr = r.u32();
        c.tag = static_cast<ValTag>(r.u8());
        c.name = r.str();
        c.literal = r.u8() != 0;
        p.cells.push_back(std::move(c));
    }
    n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        ArrayInfo a;
        a.base = r.u32();
        a.len = r.u32();
        a.tag = static_cast<ValTag>(r.u8());
        a.name = r.str();
        p.arrays.push_back(std::move(a));
    }
    n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        Block b;
        b.label = r.str();
        std::uint32_t m = r.u32();
        for (std::uint32_t j = 0; j < m; ++j) {
            CallIns ins;
            ins.op = static_cast<PrimOp>(r.u8());
            ins.flow = r.u16();
            ins.a = r.u16();
            ins.b = r.u16();
            ins.result = r.u16();
            ins.array = r.u16();
            ins.tag = static_cast<ValTag>(r.u8());
            b.instrs.push_back(ins);
        }
        b.term.kind = static_cast<TermKind>(r.u8());
        b.term.slot = r.u16();
        b.term.then_block = r.u16();
        b.term.else_block = r.u16();
        b.term.loop_back = r.u8() != 0;
        m = r.u32();
        for (std::uint32_t j = 0; j < m; ++j) b.term.conts.push_back(r.u16());
        p.blocks.push_back(std::move(b));
    }
    n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        HandlerInfo h;
        h.entry = r.u16();
        h.payload = r.u16();
        h.payload_tag = static_cast<ValTag>(r.u8());
        h.name = r.str();
        p.handlers.push_back(std::move(h));
    }
    n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = r.str();
        std::uint16_t ev = r.u16();
        p.interrupts.emplace_back(std::move(name), ev);
    }
    n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string name = r.str();
        std::uint16_t slot = r.u16();
        p.global_slots.emplace_back(std::move(name), slot);
    }
    n = r.u32();
    p.image.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) p.image.push_back(r.u16());
    r.done();
    validate_ir(p);
    return p;
}

void save_cir(const std::string& path, const IrProgram& p) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CirError("cannot open " + path + " for writing");
    std::string bytes = encode_cir(p);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw CirError("write failed for " + path);
}

IrProgram load_cir(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CirError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_cir(bytes);
}

}  // namespace purevm
