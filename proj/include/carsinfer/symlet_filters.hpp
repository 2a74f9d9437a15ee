#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace carsinfer::wavelets {

// Orthonormal least-asymmetric (symlet) scaling filters, normalized so
// that sum(h) = sqrt(2) and sum(h^2) = 1. Order p carries p vanishing
// moments and filter length 2p.
inline constexpr double kSym2[4] = {
    0.48296291314453416, 0.8365163037378079, 0.2241438680420134,
    -0.12940952255126037,
};

inline constexpr double kSym3[6] = {
    0.33267055295008263, 0.8068915093110925, 0.45987750211849154,
    -0.13501102001025458, -0.08544127388202666, 0.03522629188570953,
};

inline constexpr double kSym4[8] = {
    -0.07576571478950221, -0.029635527646002493, 0.497618667632775,
    0.8037387518051321, 0.29785779560530606, -0.09921954357663353,
    -0.012603967262031304, 0.032223100604051466,
};

inline constexpr double kSym5[10] = {
    0.027333068344998768, 0.02951949092570626, -0.039134249302313844,
    0.19939753397685558, 0.7234076904040407, 0.633978963456792,
    0.01660210576451085, -0.17532808990805623, -0.021101834024689042,
    0.019538882735249827,
};

inline constexpr double kSym6[12] = {
    0.015404109327044824, 0.0034907120842221626, -0.11799011114852002,
    -0.04831174258569806, 0.49105594192797375, 0.787641141028651,
    0.3379294217281658, -0.07263752278637658, -0.02106029251237085,
    0.04472490177078139, 0.0017677118642540077, -0.00780070832503238,
};

inline constexpr double kSym7[14] = {
    0.012015419283549189, 0.017213376300804502, -0.06490800354718848,
    -0.06413128980738582, 0.3602184609062602, 0.7819215932917282,
    0.4836109156822677, -0.05680447688966697, -0.1010109208684203,
    0.04474234946835238, 0.020464207577546033, -0.01812660513133846,
    -0.003283297847466811, 0.0022918339540537714,
};

inline constexpr double kSym8[16] = {
    -0.0033824159510050028, -0.0005421323318000107, 0.03169508781152599,
    0.007607487324976609, -0.14329423835127267, -0.061273359067811076,
    0.4813596512590534, 0.777185751699628, 0.36444189483617895,
    -0.0519458381078818, -0.027219029917103486, 0.04913717967373029,
    0.0038087520138944896, -0.014952258337062199, -0.0003029205147241331,
    0.001889950332767689,
};

inline constexpr double kSym9[18] = {
    0.0014009155259146562, 0.0006197808889855071, -0.013271967781817134,
    -0.011528210207679187, 0.030224878858275187, 0.0005834627461249819,
    -0.05456895843083335, 0.23876091460730517, 0.7178970827644124,
    0.6173384491409342, 0.03527248803527104, -0.19155083129728434,
    -0.018233770779395506, 0.062077789302885746, 0.008859267493400267,
    -0.010264064027633121, -0.00047315449868004354, 0.001069490032908612,
};

inline constexpr double kSym10[20] = {
    0.0008625782262259724, 0.0007154205420543397, -0.007056764062587304,
    0.0005956827837425191, 0.04968612664694288, 0.026240365058448987,
    -0.12155210554854895, -0.015019238839137859, 0.5137098733480263,
    0.7669548365606096, 0.34021601302346216, -0.08787871151197514,
    -0.0670899078083818, 0.03384235466357522, -0.0008687521096892581,
    -0.02300546135349751, -0.0011404297952173285, 0.005071649198531799,
    0.00034014926631480987, -0.0004101159158043983,
};

inline constexpr double kSym12[24] = {
    -0.00020526600487137938, -0.00017690949629193344, 0.002104447335629671,
    0.0006915974586788278, -0.013053840998593582, -0.001287033317152989,
    0.06005859623424475, 0.031256859883591684, -0.12359121292129573,
    -0.007517992473075242, 0.5166743899411825, 0.7608721850415805,
    0.34345150160951965, -0.08927100096836146, -0.08017578174217259,
    0.030686743515091555, 0.0018619254598864197, -0.025493025089340912,
    -0.0005948327807239624, 0.00863423079172048, 0.0006610376737514791,
    -0.001386550262370246, -8.418262000974747e-05, 9.767610247723154e-05,
};

inline constexpr double kSym32[64] = {
    -1.5665676234560052e-10, -1.8019959650290992e-10, 4.625414206180117e-09,
    4.793510472321758e-09, -6.69548567241272e-08, -6.001110084242615e-08,
    6.365560745345852e-07, 4.6411419576444026e-07, -4.519535812827561e-06,
    -2.541220560058471e-06, 2.5590523653474184e-05, 1.0925615012193961e-05,
    -0.00011913094173083881, -3.9298779650525654e-05, 0.00046417269030808554,
    0.0001189553399677032, -0.0015476221737072261, -0.0003123944975632559,
    0.004513898760190265, 0.0008587510464246411, -0.0113973368644243,
    -0.002115967889717016, 0.02548431836944147, 0.004166734939425411,
    -0.05423119134898912, -0.013081071489723506, 0.10683314123941515,
    0.06375148822185063, -0.10452048675974453, 0.0333262653194358,
    0.5202506078215093, 0.7329574450424042, 0.3520282077446049,
    -0.1048618262101544, -0.1547288242557666, -0.0022573370550488733,
    0.024064168421964207, -0.019471169415984882, -0.0007934213720082242,
    0.023745421151070752, 0.0018563408436252798, -0.014479414822025305,
    -0.0015015746900607521, 0.006928323752894872, 0.0005628760557602791,
    -0.002991541024269645, -0.00018604522118292739, 0.0011433889973875985,
    7.578834494467273e-05, -0.00036812004278087264, -3.0358255355774814e-05,
    9.676298269953304e-05, 9.428253780723707e-06, -2.0406111182174013e-05,
    -2.12641741987493e-06, 3.3931066516386546e-06, 3.4065288577714284e-07,
    -4.3205889358114557e-07, -3.7203116560071575e-08, 3.989258778560887e-08,
    2.5141532198300106e-09, -2.389964998698525e-09, -8.034500817147883e-11,
    6.984804125558315e-11,
};

inline constexpr double kSym33[66] = {
    5.8002148692646496e-11, 3.878003215299873e-11, -1.751193273096728e-09,
    -5.08612469320614e-10, 2.785898125249216e-08, 2.740735788058011e-09,
    -2.943954321944156e-07, 5.227328321959615e-09, 2.3172006195457906e-06,
    -1.3368552627853972e-07, -1.4290507491027872e-05, 6.793961464304274e-07,
    7.17035256750007e-05, 1.2891770053013563e-06, -0.00029609506154234367,
    -3.478595312592754e-05, 0.0010191358743744624, 0.000265518202650869,
    -0.0028641035698197892, -0.0011697738915722475, 0.006575176875917356,
    0.003837300765510431, -0.011065133444545785, -0.006675818370016051,
    0.015332808393437121, 0.005952051710384068, -0.010069178211101131,
    0.04061642034977766, 0.06634139132848114, -0.059509486692377524,
    -0.10579564793638238, 0.24434895057503853, 0.6918903799093797,
    0.6206068634342154, 0.11126198033133193, -0.1698697183655096,
    -0.04166670189943657, 0.07487465359928706, -0.008605368187493117,
    -0.06989434929335595, -0.010316792550537588, 0.03327877063062007,
    0.006928615228433109, -0.013786111912037081, -0.002137121774383405,
    0.006004670535678804, 0.0006897017115413168, -0.0023377204366197882,
    -0.00021717220603632907, 0.0007760130203960533, 4.607466754393842e-05,
    -0.000225638335761697, -4.245315061805458e-06, 5.7850600636013206e-05,
    -5.781491855947963e-07, -1.2706802420634966e-05, 2.0777476195041263e-07,
    2.263889328236468e-06, -1.1878506480864793e-08, -3.0568511914342656e-07,
    -3.283310112885543e-09, 2.8869700082341466e-08, 6.005666235015196e-10,
    -1.6910431653839734e-09, -3.104016082104724e-11, 4.642585174460263e-11,
};

inline constexpr double kSym34[68] = {
    3.8958249878525385e-11, 5.385979536588945e-11, -1.1562664463724278e-09,
    -1.2194691668751562e-09, 1.8066060166973498e-08, 1.5251828319939685e-08,
    -1.8688762955734564e-07, -1.2549711801136875e-07, 1.438838740590494e-06,
    7.731405361158371e-07, -8.69121926453009e-06, -3.641785021324742e-06,
    4.312791397161605e-05, 1.4132301702465397e-05, -0.00017939765061136538,
    -4.502249850447622e-05, 0.0006433548256432186, 0.0001364433328708768,
    -0.001980994479928782, -0.00034545935392358835, 0.005426552437792193,
    0.0009885190047858978, -0.012796704126169338, -0.0017172986564444636,
    0.029260258179063987, 0.007318218080929698, -0.05263581324718021,
    -0.007356601754823047, 0.11774866733305316, 0.07233704031328228,
    -0.10454930557063742, 0.024959213894112094, 0.5103707615908525,
    0.7324864316413179, 0.36272460086671976, -0.09682908476134178,
    -0.15979249223731423, -0.013915097001952387, 0.015034312362943591,
    -0.02511602729615818, -0.0038475934021281965, 0.023650825548142664,
    0.0025924603419372454, -0.014627292795600003, -0.0013913339306214207,
    0.007608264364025333, 0.0006010770277016656, -0.0034607913285713116,
    -0.00021643918951652595, 0.001395597262133446, 8.354744852939223e-05,
    -0.00048600839949659305, -3.324975333745273e-05, 0.00014248006313765442,
    1.1284807031599685e-05, -3.462326891779997e-05, -3.0085871094306654e-06,
    6.8679162973687796e-06, 6.153340580310185e-07, -1.086234035472671e-06,
    -9.441819464216323e-08, 1.3172023827783796e-07, 1.0321879260711413e-08,
    -1.1471939539554037e-08, -7.160067572416451e-10, 6.376826674515879e-10,
    2.3527685902648507e-11, -1.7018212940321348e-11,
};

inline constexpr double kSym35[70] = {
    2.933525083287855e-11, 7.973257619983761e-11, -7.195236534369473e-10,
    -1.6262550875230628e-09, 1.0614758279972384e-08, 1.8889053045088383e-08,
    -1.0982382049178677e-07, -1.5238153176038406e-07, 8.655977402674561e-07,
    9.281402679226473e-07, -5.488187149650864e-06, -4.596448516482424e-06,
    2.864451138557829e-05, 1.884769126453196e-05, -0.00012704884354067255,
    -6.807556950697923e-05, 0.00048461954788126053, 0.00022487432326883476,
    -0.0016067712108206005, -0.0006803497881902158, 0.004782827218449327,
    0.002296532916670742, -0.011897037840711323, -0.00567232764111874,
    0.02980606335031609, 0.02271826537688616, -0.046709179978658234,
    -0.031579982716207794, 0.12447550835140687, 0.1709056544684492,
    -0.01896241123038115, -0.06017211253659572, 0.33575395363482247,
    0.711589373827828, 0.5168330052016574, 0.00834030340966774,
    -0.2113625797583602, -0.10815971662310096, -0.02457399770174015,
    -0.030867110908092063, -0.0017192273207236762, 0.03950172927072623,
    0.019460356440686596, -0.015071922582370818, -0.009874173304608116,
    0.005809956143272425, 0.002938627194854016, -0.003124561181761736,
    -0.0008050138941280789, 0.0015987238945228, 0.00024635025397719946,
    -0.0006859762972623924, -8.343612013169874e-05, 0.00024746669894045245,
    3.055184513747207e-05, -7.380472362133152e-05, -1.0517385440022377e-05,
    1.7698193890933727e-05, 2.908615756940471e-06, -3.3379842657883374e-06,
    -5.971164493722995e-07, 4.862655626447525e-07, 8.738133566676863e-08,
    -5.3408502796455054e-08, -8.681432785518517e-09, 4.225799402712366e-09,
    5.297979385805832e-10, -2.179225976826287e-10, -1.51312732985809e-11,
    5.567105928224258e-12,
};

inline constexpr double kSym36[72] = {
    -9.559275327745789e-12, -1.2488889752460262e-11, 3.093678248962897e-10,
    3.3763947567413537e-10, -5.066462086687267e-09, -4.535077363055244e-09,
    5.5456574885487755e-08, 4.0712842087987656e-08, -4.5043983387987403e-07,
    -2.691539081341183e-07, 2.8846341302347643e-06, 1.3865716309461576e-06,
    -1.5134794064683501e-05, -5.7665358744325375e-06, 6.684913328439441e-05,
    1.9941363140088198e-05, -0.0002538124051268347, -6.0642573673527756e-05,
    0.0008371262414547636, 0.00016566392861511216, -0.002430140616423791,
    -0.00043632150112752813, 0.006220028247670811, 0.0010197834864576726,
    -0.014358873728226654, -0.002289330045262017, 0.030591908405632307,
    0.006891884099828311, -0.05603914342779255, -0.010203243671330178,
    0.11652151322103546, 0.071509117943518, -0.10327729545472035,
    0.028332221999066844, 0.5116569030942095, 0.731230215773827,
    0.3618136466630961, -0.09835197910731754, -0.16224555336342947,
    -0.013012348923041575, 0.019620333941118114, -0.021927056339509452,
    -0.003284336987624522, 0.02403228559906293, 0.0027053204255369136,
    -0.015373774173495858, -0.0015211570983701015, 0.008316211660890672,
    0.0006884459255192589, -0.003964430595322886, -0.0002648643324560024,
    0.0016848236778990112, 0.00010300712444581265, -0.0006287156761866518,
    -4.2477598729674e-05, 0.00020107876709649642, 1.583042352617977e-05,
    -5.423839635857312e-05, -4.781017623312215e-06, 1.2202406073568515e-05,
    1.1386464415268503e-06, -2.254187529345049e-06, -2.112008110628401e-07,
    3.332073120386318e-07, 2.9602215675341948e-08, -3.7867846237112324e-08,
    -2.94709746730696e-09, 3.1069282594786366e-09, 1.8513968501809443e-10,
    -1.6414075224496683e-10, -5.500272944456582e-12, 4.210031835972746e-12,
};

inline std::span<const double> symlet_scaling_filter(int order) {
    switch (order) {
    case 2: return {kSym2, 4};
    case 3: return {kSym3, 6};
    case 4: return {kSym4, 8};
    case 5: return {kSym5, 10};
    case 6: return {kSym6, 12};
    case 7: return {kSym7, 14};
    case 8: return {kSym8, 16};
    case 9: return {kSym9, 18};
    case 10: return {kSym10, 20};
    case 12: return {kSym12, 24};
    case 32: return {kSym32, 64};
    case 33: return {kSym33, 66};
    case 34: return {kSym34, 68};
    case 35: return {kSym35, 70};
    case 36: return {kSym36, 72};
    default:
        throw std::invalid_argument("symlet_scaling_filter: unsupported order " + std::to_string(order));
    }
}

inline const std::vector<int>& symlet_orders() {
    static const std::vector<int> orders = {2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 32, 33, 34, 35, 36};
    return orders;
}

} // namespace carsinfer::wavelets
