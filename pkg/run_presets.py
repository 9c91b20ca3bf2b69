import sys

from main import main
from utils.presets import preset_names

if __name__ == "__main__":
    names = sys.argv[1:] or preset_names()
    print("⚡ Iniciando reproducción de experimentos spikekit")
    print(f"🧪 Presets: {', '.join(names)}")
    print("📁 Salida: SPIKEKIT_OUTPUT_DIR/<preset> (por defecto runs/<preset>)")
    print("🔄 Presione CTRL+C para detener")

    failed = []
    for name in names:
        print(f"▶️  {name}")
        code = main(["reproduce", name])
        if code != 0:
            failed.append((name, code))
            print(f"❌ {name} terminó con código {code}")
        else:
            print(f"✅ {name} completado")

    sys.exit(max((code for _, code in failed), default=0))
