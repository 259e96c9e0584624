#include "scenefuse/audio/wav.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "scenefuse/common/binary_io.hpp"
#include "scenefuse/common/error.hpp"

namespace sf::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

}  // namespace

void AudioClip::validate() const {
  if (channels[0].size() != channels[1].size()) {
    throw Error(ErrorKind::shape, "channel lengths differ: " + std::to_string(channels[0].size()) +
                                      " vs " + std::to_string(channels[1].size()));
  }
  for (const auto& ch : channels) {
    if (!std::all_of(ch.begin(), ch.end(), [](float s) { return std::isfinite(s); })) {
      throw Error(ErrorKind::format, "non-finite sample in clip");
    }
  }
}

AudioClip parse_wav(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, ErrorKind::format);
  if (in.remaining() < 12 || in.get_string(4) != "RIFF") {
    throw Error(ErrorKind::format, "missing RIFF header");
  }
  in.get<std::uint32_t>();  // riff size, often wrong in the wild
  if (in.get_string(4) != "WAVE") throw Error(ErrorKind::format, "missing WAVE tag");

  std::optional<FormatChunk> fmt;
  std::span<const std::uint8_t> payload;
  bool have_data = false;

  while (in.remaining() >= 8 && !have_data) {
    const std::string id = in.get_string(4);
    const auto size = in.get<std::uint32_t>();
    if (id == "fmt ") {
      if (size < 16) throw Error(ErrorKind::format, "fmt chunk too small");
      auto chunk = in.get_span(size);
      ByteReader f(chunk, ErrorKind::format);
      FormatChunk c;
      c.format = f.get<std::uint16_t>();
      c.channels = f.get<std::uint16_t>();
      c.sample_rate = f.get<std::uint32_t>();
      f.get<std::uint32_t>();  // byte rate
      f.get<std::uint16_t>();  // block align
      c.bits = f.get<std::uint16_t>();
      if (c.format == kFormatExtensible) {
        if (size < 40) throw Error(ErrorKind::format, "extensible fmt chunk too small");
        f.skip(2 + 2 + 4);  // cbSize, valid bits, channel mask
        c.format = f.get<std::uint16_t>();  // first two bytes of the sub-format GUID
      }
      fmt = c;
    } else if (id == "data") {
      if (!fmt) throw Error(ErrorKind::format, "data chunk before fmt chunk");
      // Tolerate a data size that overstates the file (streamed writers).
      payload = in.get_span(std::min<std::size_t>(size, in.remaining()));
      have_data = true;
      break;
    } else {
      in.skip(std::min<std::size_t>(size, in.remaining()));
    }
    if (size % 2 == 1 && in.remaining() > 0) in.skip(1);
  }
  if (!fmt) throw Error(ErrorKind::format, "no fmt chunk");
  if (!have_data) throw Error(ErrorKind::format, "no data chunk");
  if (fmt->sample_rate == 0) throw Error(ErrorKind::format, "sample rate is zero");

  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
  const bool f32 = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !f32) {
    throw Error(ErrorKind::unsupported_codec,
                "format tag " + std::to_string(fmt->format) + " with " +
                    std::to_string(fmt->bits) + " bits per sample");
  }
  if (fmt->channels != 1 && fmt->channels != 2) {
    throw Error(ErrorKind::unsupported_codec,
                std::to_string(fmt->channels) + " channels (only mono/stereo supported)");
  }

  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  const std::size_t frames = payload.size() / frame_bytes;

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt->sample_rate);
  clip.channels[0].resize(frames);
  clip.channels[1].resize(frames);

  ByteReader data(payload, ErrorKind::format);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      float s;
      if (pcm16) {
        s = static_cast<float>(data.get<std::int16_t>()) / 32768.0f;
      } else {
        s = data.get<float>();
        if (!std::isfinite(s)) throw Error(ErrorKind::format, "non-finite float sample");
        s = std::clamp(s, -1.0f, 1.0f);
      }
      clip.channels[c][i] = s;
    }
  }
  if (fmt->channels == 1) clip.channels[1] = clip.channels[0];
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavEncoding encoding) {
  clip.validate();
  const std::uint16_t channels = 2;
  const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
  const std::uint16_t tag = encoding == WavEncoding::pcm16 ? kFormatPcm : kFormatFloat;
  const auto frames = static_cast<std::uint32_t>(clip.frames());
  const std::uint32_t block = channels * bits / 8;
  const std::uint32_t data_size = frames * block;

  ByteWriter out;
  out.put_bytes("RIFF");
  out.put<std::uint32_t>(36 + data_size);
  out.put_bytes("WAVE");
  out.put_bytes("fmt ");
  out.put<std::uint32_t>(16);
  out.put<std::uint16_t>(tag);
  out.put<std::uint16_t>(channels);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(clip.sample_rate));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(clip.sample_rate) * block);
  out.put<std::uint16_t>(static_cast<std::uint16_t>(block));
  out.put<std::uint16_t>(bits);
  out.put_bytes("data");
  out.put<std::uint32_t>(data_size);
  for (std::uint32_t i = 0; i < frames; ++i) {
    for (const auto& ch : clip.channels) {
      const float s = std::clamp(ch[i], -1.0f, 1.0f);
      if (encoding == WavEncoding::pcm16) {
        const long q = std::lround(static_cast<double>(s) * 32767.0);
        out.put<std::int16_t>(static_cast<std::int16_t>(q));
      } else {
        out.put<float>(s);
      }
    }
  }
  return out.take();
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
  write_file_bytes(path, encode_wav(clip, encoding));
}

}  // namespace sf::audio
